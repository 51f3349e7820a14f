#include "sdrl/fsa.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace sdrl::fsa {

void FsaInput::validate() const {
  if (total_steps <= 0) throw std::invalid_argument("FsaInput: total_steps must be positive");
  if (failure_count < 0 || failure_count > total_steps) {
    throw std::invalid_argument("FsaInput: failure_count must lie in [0, total_steps]");
  }
  if (!(safe_state_probability_mass >= 0.0 && safe_state_probability_mass <= 1.0)) {
    throw std::invalid_argument("FsaInput: safe-state probability mass must lie in [0, 1]");
  }
}

double compute_mttf(const FsaInput& input) {
  input.validate();
  if (input.failure_count == 0) return static_cast<double>(input.total_steps);
  return static_cast<double>(input.total_steps) / static_cast<double>(input.failure_count);
}

double compute_pfd(const FsaInput& input, double mttf) {
  if (!(mttf > 0.0) || !std::isfinite(mttf)) throw std::invalid_argument("compute_pfd: mttf must be positive");
  const double m = input.safe_state_probability_mass;
  if (!(m >= 0.0 && m <= 1.0)) throw std::invalid_argument("compute_pfd: mass must lie in [0, 1]");
  return std::clamp((1.0 - m) / mttf, kPfdFloor, 1.0);
}

double compute_rrf(double pfd) {
  if (!(pfd > 0.0)) throw std::invalid_argument("compute_rrf: pfd must be positive");
  return 1.0 / pfd;
}

const std::vector<SilBand>& sil_bands() {
  static const std::vector<SilBand> bands{
      {4, 1e-5, 1e-4, 1e4, 1e5},
      {3, 1e-4, 1e-3, 1e3, 1e4},
      {2, 1e-3, 1e-2, 1e2, 1e3},
      {1, 1e-2, 1e-1, 1e1, 1e2},
  };
  return bands;
}

int assign_sil(double pfd) {
  if (!(pfd > 0.0 && pfd <= 1.0)) throw std::invalid_argument("assign_sil: pfd must lie in (0, 1]");
  if (pfd >= 1e-1) return 0;
  if (pfd >= 1e-2) return 1;
  if (pfd >= 1e-3) return 2;
  if (pfd >= 1e-4) return 3;
  return 4;
}

FsaReport assess(const FsaInput& input) {
  FsaReport r;
  r.input = input;
  r.mttf = compute_mttf(input);
  r.no_observed_failures = input.failure_count == 0;
  r.pfd = compute_pfd(input, r.mttf);
  r.rrf = compute_rrf(r.pfd);
  r.sil = assign_sil(r.pfd);
  r.literal_form = (1.0 - input.safe_state_probability_mass) * (1.0 - r.mttf);
  return r;
}

FsaInput input_from_records(std::span<const metrics::EpisodeRecord> records, double mass) {
  FsaInput in;
  in.safe_state_probability_mass = mass;
  for (const auto& r : records) {
    in.total_steps += r.steps;
    in.failure_count += r.failures;
  }
  return in;
}

nlohmann::json to_json(const FsaReport& r) {
  nlohmann::json bands = nlohmann::json::array();
  for (const auto& b : sil_bands()) {
    bands.push_back({{"sil", b.sil}, {"pfd_low", b.pfd_low}, {"pfd_high", b.pfd_high},
                     {"rrf_low", b.rrf_low}, {"rrf_high", b.rrf_high}});
  }
  return nlohmann::json{
      {"inputs",
       {{"total_steps", r.input.total_steps},
        {"failure_count", r.input.failure_count},
        {"safe_state_probability_mass", r.input.safe_state_probability_mass}}},
      {"mttf", r.mttf},
      {"no_observed_failures", r.no_observed_failures},
      {"pfd", r.pfd},
      {"rrf", r.rrf},
      {"sil", r.sil},
      {"sil_bands", bands},
      {"sil2_range", {{"pfd", "0.01 to 0.001"}, {"rrf", "100 to 1000"}, {"mttf", "> 100 steps"}}},
      {"pfd_literal_form", r.literal_form},
      {"notes",
       {"pfd = (1 - mass) / mttf",
        "pfd_literal_form = (1 - mass) * (1 - mttf), shown for reference and not used"}}};
}

std::string format_table(const FsaReport& r) {
  auto row = [](const char* name, const std::string& value, const char* range) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "| %-8s | %-14s | %-14s |\n", name, value.c_str(), range);
    return std::string(buf);
  };
  auto num = [](const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return std::string(buf);
  };
  std::ostringstream out;
  out << row("Metrics", "Value", "SIL 2 Range");
  out << "|----------|----------------|----------------|\n";
  std::string mttf = num("%.2f", r.mttf);
  if (r.no_observed_failures) mttf = ">= " + mttf;
  out << row("MTTF", mttf, "> 100 steps");
  out << row("PFD", num("%.6g", r.pfd), "0.01 to 0.001");
  out << row("RRF", num("%.2f", r.rrf), "100 to 1000");
  out << row("SIL", std::to_string(r.sil), "2");
  out << "\nsteps " << r.input.total_steps << ", failures " << r.input.failure_count
      << ", safe-state mass " << r.input.safe_state_probability_mass << '\n';
  if (r.no_observed_failures) out << "no observed failures; MTTF is a lower bound\n";
  out << "note: (1 - mass) * (1 - MTTF) = " << num("%.6g", r.literal_form)
      << " (literal form, not used)\n";
  return out.str();
}

AssessmentResult run_assessment(const env::EnvConfig& config, const tqc::Policy& policy,
                                const AssessmentOptions& options) {
  if (options.episodes < 1) throw std::invalid_argument("run_assessment: need at least one episode");
  RolloutOptions ro;
  ro.episodes = options.episodes;
  ro.seed = options.seed;
  ro.scenarios = options.scenarios;
  ro.disturbance = options.disturbance;
  ro.workers = options.workers;
  AssessmentResult result;
  result.traces = run_episodes(config, policy, ro);
  const auto records = records_of(result.traces);
  result.report = assess(input_from_records(records, options.safe_state_probability_mass));
  return result;
}

}  // namespace sdrl::fsa

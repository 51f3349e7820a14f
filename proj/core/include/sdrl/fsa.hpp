#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdrl/metrics.hpp"
#include "sdrl/rollout.hpp"

namespace sdrl::fsa {

struct FsaInput {
  long total_steps = 0;
  long failure_count = 0;
  double safe_state_probability_mass = 0.0;

  /// Throws std::invalid_argument unless 0 < total_steps, 0 <= failures <= steps, mass in [0, 1].
  void validate() const;
};

inline constexpr double kPfdFloor = 1e-12;

/// total_steps / failure_count; with no failures, total_steps (a lower bound).
double compute_mttf(const FsaInput& input);
/// (1 - mass) / mttf clamped to [kPfdFloor, 1].
double compute_pfd(const FsaInput& input, double mttf);
double compute_rrf(double pfd);
/// IEC 61508 low-demand decade bands. Boundary values take the lower SIL.
int assign_sil(double pfd);

struct SilBand {
  int sil;
  double pfd_low;   // inclusive
  double pfd_high;  // exclusive
  double rrf_low;
  double rrf_high;
};
const std::vector<SilBand>& sil_bands();

struct FsaReport {
  FsaInput input;
  double mttf = 0.0;
  bool no_observed_failures = false;
  double pfd = 0.0;
  double rrf = 0.0;
  int sil = 0;
  double literal_form = 0.0;  // (1 - mass) * (1 - mttf), reported for reference only
};

FsaReport assess(const FsaInput& input);
FsaInput input_from_records(std::span<const metrics::EpisodeRecord> records,
                            double safe_state_probability_mass = 0.0);

nlohmann::json to_json(const FsaReport& report);
/// Plain-text table: Metrics | value | SIL 2 range.
std::string format_table(const FsaReport& report);

struct AssessmentOptions {
  int episodes = 500;
  std::vector<env::Scenario> scenarios{env::Scenario::Normal, env::Scenario::StaticObstacle};
  world::DisturbanceSpec disturbance = world::DisturbanceSpec::assessment_default();
  std::uint64_t seed = 0;
  int workers = 1;
  double safe_state_probability_mass = 0.0;
};

struct AssessmentResult {
  FsaReport report;
  std::vector<EpisodeTrace> traces;
};

/// Rolls out the policy and reduces the episodes into a report.
AssessmentResult run_assessment(const env::EnvConfig& config, const tqc::Policy& policy,
                                const AssessmentOptions& options);

}  // namespace sdrl::fsa

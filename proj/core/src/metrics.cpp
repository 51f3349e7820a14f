#include "sdrl/metrics.hpp"

#include <stdexcept>

namespace sdrl::metrics {

namespace {

void require_records(std::span<const EpisodeRecord> records, const char* what) {
  if (records.empty()) throw std::invalid_argument(std::string(what) + ": no episodes");
}

}  // namespace

ViolationCounts& ViolationCounts::operator+=(const ViolationCounts& o) {
  collision += o.collision;
  obstacle_collision += o.obstacle_collision;
  speed += o.speed;
  velocity += o.velocity;
  velocity_during_collision += o.velocity_during_collision;
  return *this;
}

bool is_failure_step(const env::TransitionEvents& e, double force_threshold) {
  return e.collision_env || e.collision_obstacle || e.speed_violation ||
         e.collision_force > force_threshold;
}

void EpisodeAccumulator::add(double reward, bool terminated, const env::TransitionEvents& e) {
  record_.return_sum += reward;
  ++record_.steps;
  if (e.grasp_success) record_.success = true;
  auto& v = record_.violations;
  v.collision += e.collision_env;
  v.obstacle_collision += e.collision_obstacle;
  v.speed += e.speed_violation;
  v.velocity += e.velocity_violation;
  v.velocity_during_collision += e.collision_velocity_exceeded;
  record_.failures += is_failure_step(e, force_threshold_);
  if (terminated && !e.grasp_success) record_.terminated_by_failure = true;
}

void EpisodeAccumulator::add(const env::StepRecord& s) { add(s.reward, s.terminated, s.events); }

std::vector<EpisodeRecord> episodes_from_steps(std::span<const env::StepRecord> steps,
                                               double force_threshold) {
  std::vector<EpisodeRecord> out;
  EpisodeAccumulator acc(force_threshold);
  long current = 0;
  for (const auto& s : steps) {
    if (!acc.empty() && s.episode != current) {
      out.push_back(acc.record());
      acc = EpisodeAccumulator(force_threshold);
    }
    current = s.episode;
    acc.add(s);
  }
  if (!acc.empty()) out.push_back(acc.record());
  return out;
}

double average_return_normalized(std::span<const EpisodeRecord> records) {
  require_records(records, "average_return_normalized");
  double ret = 0.0, all_steps = 0.0, failed_steps = 0.0;
  long failed = 0;
  for (const auto& r : records) {
    ret += r.return_sum;
    all_steps += static_cast<double>(r.steps);
    if (r.terminated_by_failure) {
      failed_steps += static_cast<double>(r.steps);
      ++failed;
    }
  }
  const double n = static_cast<double>(records.size());
  const double divisor = failed > 0 ? failed_steps / static_cast<double>(failed) : all_steps / n;
  return (ret / n) / divisor;
}

ViolationMeans average_violations(std::span<const EpisodeRecord> records) {
  require_records(records, "average_violations");
  ViolationCounts sum;
  for (const auto& r : records) sum += r.violations;
  const double n = static_cast<double>(records.size());
  return {static_cast<double>(sum.collision) / n, static_cast<double>(sum.obstacle_collision) / n,
          static_cast<double>(sum.speed) / n, static_cast<double>(sum.velocity) / n,
          static_cast<double>(sum.velocity_during_collision) / n};
}

double success_rate(std::span<const EpisodeRecord> records) {
  require_records(records, "success_rate");
  long k = 0;
  for (const auto& r : records) k += r.success;
  return static_cast<double>(k) / static_cast<double>(records.size());
}

double safety_driven_success_rate(std::span<const EpisodeRecord> records) {
  require_records(records, "safety_driven_success_rate");
  long k = 0;
  for (const auto& r : records) k += r.success && r.violations.total() == 0;
  return static_cast<double>(k) / static_cast<double>(records.size());
}

Summary summarize(std::span<const EpisodeRecord> records) {
  Summary s;
  s.episodes = static_cast<long>(records.size());
  if (records.empty()) return s;
  double ret = 0.0;
  for (const auto& r : records) {
    s.total_steps += r.steps;
    s.successes += r.success;
    s.safe_successes += r.success && r.violations.total() == 0;
    s.failed_episodes += r.terminated_by_failure;
    ret += r.return_sum;
  }
  s.mean_return = ret / static_cast<double>(s.episodes);
  s.average_return_normalized = average_return_normalized(records);
  s.violations = average_violations(records);
  s.success_rate = success_rate(records);
  s.safety_driven_success_rate = safety_driven_success_rate(records);
  return s;
}

nlohmann::json to_json(const ViolationMeans& v) {
  return nlohmann::json{{"collision", v.collision},
                        {"obstacle_collision", v.obstacle_collision},
                        {"speed", v.speed},
                        {"velocity", v.velocity},
                        {"velocity_during_collision", v.velocity_during_collision}};
}

nlohmann::json to_json(const Summary& s) {
  return nlohmann::json{{"episodes", s.episodes},
                        {"total_steps", s.total_steps},
                        {"successes", s.successes},
                        {"safe_successes", s.safe_successes},
                        {"failed_episodes", s.failed_episodes},
                        {"mean_return", s.mean_return},
                        {"average_return_normalized", s.average_return_normalized},
                        {"average_violations", to_json(s.violations)},
                        {"success_rate", s.success_rate},
                        {"safety_driven_success_rate", s.safety_driven_success_rate}};
}

}  // namespace sdrl::metrics

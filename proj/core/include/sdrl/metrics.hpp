#pragma once

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdrl/episode_log.hpp"

namespace sdrl::metrics {

struct ViolationCounts {
  long collision = 0;  // workcell contacts (table, workspace bounds)
  long obstacle_collision = 0;
  long speed = 0;
  long velocity = 0;
  long velocity_during_collision = 0;

  long total() const { return collision + obstacle_collision + speed + velocity + velocity_during_collision; }
  ViolationCounts& operator+=(const ViolationCounts& o);
  bool operator==(const ViolationCounts&) const = default;
};

struct EpisodeRecord {
  double return_sum = 0.0;
  long steps = 0;
  bool success = false;
  ViolationCounts violations;
  bool terminated_by_failure = false;
  long failures = 0;  // steps classified as failures for the safety assessment

  bool operator==(const EpisodeRecord&) const = default;
};

/// Per-episode mean of each violation type.
struct ViolationMeans {
  double collision = 0.0;
  double obstacle_collision = 0.0;
  double speed = 0.0;
  double velocity = 0.0;
  double velocity_during_collision = 0.0;
};

/// A step counts as a failure on a workcell or obstacle collision, a speed violation, or a
/// contact force above `force_threshold`.
bool is_failure_step(const env::TransitionEvents& e, double force_threshold);

/// Folds StepRecords of one episode, in order, into an EpisodeRecord.
class EpisodeAccumulator {
 public:
  explicit EpisodeAccumulator(double force_threshold = 100.0) : force_threshold_(force_threshold) {}
  void add(const env::StepRecord& step);
  void add(double reward, bool terminated, const env::TransitionEvents& events);
  const EpisodeRecord& record() const { return record_; }
  bool empty() const { return record_.steps == 0; }

 private:
  double force_threshold_;
  EpisodeRecord record_;
};

/// Groups a log into episodes by consecutive runs of the episode field.
std::vector<EpisodeRecord> episodes_from_steps(std::span<const env::StepRecord> steps,
                                               double force_threshold = 100.0);

/// mean(return) / mean(steps of failed episodes); falls back to mean(steps) if none failed.
/// All four metrics throw std::invalid_argument on empty input.
double average_return_normalized(std::span<const EpisodeRecord> records);
ViolationMeans average_violations(std::span<const EpisodeRecord> records);
double success_rate(std::span<const EpisodeRecord> records);
/// Episodes that succeeded with zero violations of every type.
double safety_driven_success_rate(std::span<const EpisodeRecord> records);

struct Summary {
  long episodes = 0;
  long total_steps = 0;
  long successes = 0;
  long safe_successes = 0;
  long failed_episodes = 0;
  double mean_return = 0.0;
  double average_return_normalized = 0.0;
  ViolationMeans violations;
  double success_rate = 0.0;
  double safety_driven_success_rate = 0.0;
};

Summary summarize(std::span<const EpisodeRecord> records);
nlohmann::json to_json(const ViolationMeans& v);
nlohmann::json to_json(const Summary& s);

}  // namespace sdrl::metrics

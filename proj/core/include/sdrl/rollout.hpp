#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sdrl/env.hpp"
#include "sdrl/episode_log.hpp"
#include "sdrl/metrics.hpp"
#include "sdrl/policies.hpp"

namespace sdrl {

/// splitmix64 of base + index; stable per-episode seeds independent of worker count.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

struct RolloutOptions {
  int episodes = 1;
  std::uint64_t seed = 0;
  std::vector<env::Scenario> scenarios{env::Scenario::Normal};  // cycled by episode index
  world::DisturbanceSpec disturbance;
  int workers = 1;
  long first_episode = 0;  // written to the episode field of each StepRecord
};

struct EpisodeTrace {
  long episode = 0;
  std::uint64_t seed = 0;
  env::Scenario scenario = env::Scenario::Normal;
  world::Scene scene;  // as laid out by reset
  std::vector<env::StepRecord> steps;
  metrics::EpisodeRecord record;
};

EpisodeTrace run_episode(env::GraspEnv& environment, tqc::Policy& policy, long episode,
                         std::uint64_t seed, env::Scenario scenario,
                         const world::DisturbanceSpec& disturbance);

/// Rolls out `options.episodes` episodes. With workers > 1 each worker owns an environment and
/// a policy clone; results come back in episode order and match the single-worker output.
std::vector<EpisodeTrace> run_episodes(const env::EnvConfig& config, const tqc::Policy& policy,
                                       const RolloutOptions& options);

std::vector<metrics::EpisodeRecord> records_of(const std::vector<EpisodeTrace>& traces);

}  // namespace sdrl

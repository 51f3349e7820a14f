#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sdrl/env.hpp"
#include "sdrl/episode_log.hpp"
#include "sdrl/metrics.hpp"
#include "sdrl/tqc.hpp"

namespace sdrl {

struct TrainOptions {
  long total_steps = 5000;
  int eval_every_episodes = 25;
  int eval_episodes = 10;
  env::Scenario scenario = env::Scenario::Normal;
  std::uint64_t seed = 0;
  int eval_workers = 1;
  long checkpoint_every_steps = 0;  // 0: only the final checkpoint
};

struct EvalPoint {
  long episode = 0;    // training episodes completed
  long env_steps = 0;  // training steps taken
  metrics::Summary summary;
};

/// Optional observers. Unset callbacks are skipped.
struct TrainSinks {
  std::function<void(const env::StepRecord&)> on_step;
  std::function<void(const tqc::TrainDiagnostics&)> on_update;
  std::function<void(const EvalPoint&)> on_eval;
  std::function<void(const tqc::TqcAgent&, long env_steps)> on_checkpoint;
};

struct TrainResult {
  long env_steps = 0;
  long episodes = 0;
  long updates = 0;
  metrics::Summary training;  // over completed training episodes
  std::vector<EvalPoint> evaluations;
  EvalPoint final_evaluation;
};

/// Evaluation episodes use deterministic actions and a fixed seed set derived from `seed`.
metrics::Summary evaluate_agent(const env::EnvConfig& config, const tqc::TqcAgent& agent,
                                env::Scenario scenario, int episodes, std::uint64_t seed,
                                int workers = 1);

/// Off-policy loop: uniform random actions during warmup, then stochastic actor actions with
/// updates every train_freq steps. Deterministic for a fixed seed.
TrainResult train(const env::EnvConfig& config, const tqc::TqcConfig& tqc_config,
                  const TrainOptions& options, const TrainSinks& sinks = {});

}  // namespace sdrl

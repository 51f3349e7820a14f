#include "sdrl/rollout.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace sdrl {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

EpisodeTrace run_episode(env::GraspEnv& environment, tqc::Policy& policy, long episode,
                         std::uint64_t seed, env::Scenario scenario,
                         const world::DisturbanceSpec& disturbance) {
  EpisodeTrace trace;
  trace.episode = episode;
  trace.seed = seed;
  trace.scenario = scenario;
  metrics::EpisodeAccumulator acc(environment.config().reward.force_failure_threshold);
  policy.begin_episode(seed);
  env::Observation obs = environment.reset(seed, scenario, disturbance);
  trace.scene = environment.scene();
  while (!environment.done()) {
    const env::Action action = policy.act(obs);
    const env::StepResult r = environment.step(action);
    env::StepRecord rec;
    rec.episode = episode;
    rec.step = environment.steps();
    rec.action = action.clamped().to_array();
    rec.reward = r.reward;
    rec.terminated = r.terminated;
    rec.truncated = r.truncated;
    rec.events = r.events;
    rec.eef = r.observation.eef_position;
    rec.cube = r.observation.cube_position;
    acc.add(rec);
    trace.steps.push_back(rec);
    obs = r.observation;
  }
  trace.record = acc.record();
  return trace;
}

std::vector<EpisodeTrace> run_episodes(const env::EnvConfig& config, const tqc::Policy& policy,
                                       const RolloutOptions& options) {
  if (options.episodes < 0 || options.workers < 1 || options.scenarios.empty()) {
    throw std::invalid_argument("run_episodes: need episodes >= 0, workers >= 1, a scenario");
  }
  std::vector<EpisodeTrace> traces(static_cast<std::size_t>(options.episodes));
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    try {
      env::GraspEnv environment(config);
      auto local = policy.clone();
      for (int i = next++; i < options.episodes; i = next++) {
        const auto scenario = options.scenarios[static_cast<std::size_t>(i) % options.scenarios.size()];
        traces[static_cast<std::size_t>(i)] =
            run_episode(environment, *local, options.first_episode + i,
                        derive_seed(options.seed, static_cast<std::uint64_t>(i)), scenario,
                        options.disturbance);
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
      next = options.episodes;
    }
  };

  const int n = std::min(options.workers, std::max(options.episodes, 1));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return traces;
}

std::vector<metrics::EpisodeRecord> records_of(const std::vector<EpisodeTrace>& traces) {
  std::vector<metrics::EpisodeRecord> out;
  out.reserve(traces.size());
  for (const auto& t : traces) out.push_back(t.record);
  return out;
}

}  // namespace sdrl

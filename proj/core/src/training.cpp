#include "sdrl/training.hpp"

#include <stdexcept>

#include "sdrl/policies.hpp"
#include "sdrl/replay_buffer.hpp"
#include "sdrl/rollout.hpp"

namespace sdrl {

namespace {

constexpr std::uint64_t kEvalStream = 0xe7a1;
constexpr std::uint64_t kTrainStream = 0x7a1e;
constexpr std::uint64_t kWarmupStream = 0x3a3a;

template <std::size_t N>
std::vector<double> as_vector(const std::array<double, N>& a) {
  return {a.begin(), a.end()};
}

}  // namespace

metrics::Summary evaluate_agent(const env::EnvConfig& config, const tqc::TqcAgent& agent,
                                env::Scenario scenario, int episodes, std::uint64_t seed,
                                int workers) {
  RolloutOptions ro;
  ro.episodes = episodes;
  ro.seed = derive_seed(seed, kEvalStream);
  ro.scenarios = {scenario};
  ro.workers = workers;
  const auto traces = run_episodes(config, tqc::ActorPolicy::from_agent(agent), ro);
  const auto records = records_of(traces);
  return metrics::summarize(records);
}

TrainResult train(const env::EnvConfig& config, const tqc::TqcConfig& tqc_config,
                  const TrainOptions& options, const TrainSinks& sinks) {
  if (options.total_steps < 1 || options.eval_every_episodes < 1 || options.eval_episodes < 1) {
    throw std::invalid_argument("train: steps, eval cadence and eval episodes must be positive");
  }
  tqc::TqcAgent agent(env::kObservationDim, env::kActionDim, tqc_config, options.seed);
  tqc::ReplayBuffer buffer(tqc_config.replay_capacity, env::kObservationDim, env::kActionDim);
  env::GraspEnv environment(config);
  tqc::RandomPolicy warmup(derive_seed(options.seed, kWarmupStream));

  TrainResult result;
  std::vector<metrics::EpisodeRecord> finished;
  metrics::EpisodeAccumulator acc(config.reward.force_failure_threshold);
  auto reset = [&] {
    return environment.reset(derive_seed(derive_seed(options.seed, kTrainStream),
                                         static_cast<std::uint64_t>(result.episodes)),
                             options.scenario);
  };
  env::Observation obs = reset();

  for (long t = 0; t < options.total_steps; ++t) {
    const auto flat = obs.to_array();
    env::Action action;
    if (t < tqc_config.warmup_steps) {
      action = warmup.act(obs);
    } else {
      const auto s = agent.act(Eigen::Map<const nn::Vector>(flat.data(), env::kObservationDim), true);
      action = env::Action::from_span(std::span<const double>(s.action.data(), env::kActionDim));
    }
    const env::StepResult r = environment.step(action);

    tqc::Transition tr;
    tr.observation = as_vector(flat);
    tr.action = as_vector(action.clamped().to_array());
    tr.reward = r.reward;
    tr.next_observation = as_vector(r.observation.to_array());
    tr.terminated = r.terminated;
    buffer.add(tr);

    env::StepRecord rec;
    rec.episode = result.episodes;
    rec.step = environment.steps();
    rec.action = action.clamped().to_array();
    rec.reward = r.reward;
    rec.terminated = r.terminated;
    rec.truncated = r.truncated;
    rec.events = r.events;
    rec.eef = r.observation.eef_position;
    rec.cube = r.observation.cube_position;
    acc.add(rec);
    if (sinks.on_step) sinks.on_step(rec);
    obs = r.observation;
    result.env_steps = t + 1;

    if (t >= tqc_config.warmup_steps && (t + 1) % tqc_config.train_freq == 0) {
      for (int g = 0; g < tqc_config.gradient_steps; ++g) {
        const auto diag = agent.train_step(buffer);
        if (diag && sinks.on_update) sinks.on_update(*diag);
      }
    }
    if (options.checkpoint_every_steps > 0 && result.env_steps % options.checkpoint_every_steps == 0 &&
        sinks.on_checkpoint) {
      sinks.on_checkpoint(agent, result.env_steps);
    }

    if (environment.done()) {
      finished.push_back(acc.record());
      acc = metrics::EpisodeAccumulator(config.reward.force_failure_threshold);
      ++result.episodes;
      if (result.episodes % options.eval_every_episodes == 0) {
        EvalPoint p{result.episodes, result.env_steps,
                    evaluate_agent(config, agent, options.scenario, options.eval_episodes,
                                   options.seed, options.eval_workers)};
        if (sinks.on_eval) sinks.on_eval(p);
        result.evaluations.push_back(p);
      }
      obs = reset();
    }
  }

  result.updates = agent.updates();
  if (!finished.empty()) result.training = metrics::summarize(finished);
  result.final_evaluation = {result.episodes, result.env_steps,
                             evaluate_agent(config, agent, options.scenario, options.eval_episodes,
                                            options.seed, options.eval_workers)};
  if (sinks.on_checkpoint) sinks.on_checkpoint(agent, result.env_steps);
  return result;
}

}  // namespace sdrl

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include "sdrl/env.hpp"
#include "sdrl/tqc.hpp"

namespace sdrl::tqc {

/// Maps observations to actions. Each rollout worker owns its own clone.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void begin_episode(std::uint64_t /*seed*/) {}
  virtual env::Action act(const env::Observation& obs) = 0;
  virtual std::unique_ptr<Policy> clone() const = 0;
  virtual std::string name() const = 0;
};

struct ScriptedOptions {
  double action_scale = 0.02;  // must match the env, m per unit action
  double max_step = 0.01;      // m per step, Euclidean
  double hover_height = 0.08;  // m above the cube center while aligning
  double align_tolerance = 0.004;
  double close_radius = 0.004;
  bool reach_only = false;  // stop at the hover point and never close
};

/// Proportional controller: align above the cube, descend, close, lift.
class ScriptedPolicy final : public Policy {
 public:
  explicit ScriptedPolicy(ScriptedOptions options = {});
  env::Action act(const env::Observation& obs) override;
  std::unique_ptr<Policy> clone() const override { return std::make_unique<ScriptedPolicy>(*this); }
  std::string name() const override { return options_.reach_only ? "reach-only" : "scripted"; }

 private:
  ScriptedOptions options_;
};

/// Uniform actions on [-1, 1]^4, reseeded per episode.
class RandomPolicy final : public Policy {
 public:
  explicit RandomPolicy(std::uint64_t seed = 0) : rng_(seed) {}
  void begin_episode(std::uint64_t seed) override { rng_.seed(seed ^ 0x5bd1e995ULL); }
  env::Action act(const env::Observation& obs) override;
  std::unique_ptr<Policy> clone() const override { return std::make_unique<RandomPolicy>(*this); }
  std::string name() const override { return "random"; }

 private:
  std::mt19937_64 rng_;
};

/// Repeats one action forever.
class ConstantPolicy final : public Policy {
 public:
  explicit ConstantPolicy(env::Action action) : action_(action) {}
  env::Action act(const env::Observation&) override { return action_; }
  std::unique_ptr<Policy> clone() const override { return std::make_unique<ConstantPolicy>(*this); }
  std::string name() const override { return "constant"; }

 private:
  env::Action action_;
};

/// Deterministic actor, tanh(mean).
class ActorPolicy final : public Policy {
 public:
  ActorPolicy(std::shared_ptr<const Actor> actor, nn::ParameterSet params);
  static ActorPolicy from_agent(const TqcAgent& agent);
  static ActorPolicy from_checkpoint(const std::filesystem::path& path);

  env::Action act(const env::Observation& obs) override;
  std::unique_ptr<Policy> clone() const override { return std::make_unique<ActorPolicy>(*this); }
  std::string name() const override { return "checkpoint"; }

 private:
  std::shared_ptr<const Actor> actor_;
  nn::ParameterSet params_;
};

}  // namespace sdrl::tqc

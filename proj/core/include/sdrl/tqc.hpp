#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdrl/checkpoint.hpp"
#include "sdrl/nn.hpp"
#include "sdrl/replay_buffer.hpp"

namespace sdrl::tqc {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TqcConfig {
  int n_critics = 2;
  int quantiles_per_critic = 25;
  int dropped_per_critic = 2;
  double gamma = 0.99;
  double tau = 0.005;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  double alpha_lr = 3e-4;
  int batch_size = 256;
  std::optional<double> target_entropy;  // defaults to -action_dim
  std::size_t replay_capacity = 1'000'000;
  int warmup_steps = 1000;
  std::vector<int> hidden{64, 64};
  int train_freq = 1;      // env steps between update rounds
  int gradient_steps = 1;  // updates per round
  double initial_alpha = 1.0;

  /// Throws ConfigError on an invalid combination.
  void validate() const;
  int kept_per_critic() const { return quantiles_per_critic - dropped_per_critic; }
};

nlohmann::json to_json(const TqcConfig& c);
TqcConfig tqc_config_from_json(const nlohmann::json& j);

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

/// Quantile midpoints (2m - 1) / 2M for m = 1..M.
nn::Vector quantile_fractions(int m);

/// Pools the N*M next-state atoms of one sample, keeps the smallest k*N (k = M - d), and maps
/// each kept atom z to reward + (1 - terminated) * gamma * (z - entropy_term). Output ascending.
std::vector<double> truncated_target(std::span<const double> pooled_atoms, int n_critics,
                                     int quantiles_per_critic, int dropped_per_critic,
                                     double reward, bool terminated, double gamma,
                                     double entropy_term);

/// Mean over (prediction, target) pairs of |tau_m - 1{u < 0}| * Huber(u), u = target - prediction.
double quantile_huber_loss(std::span<const double> predicted, std::span<const double> targets,
                           std::span<const double> fractions);

/// log density of a = tanh(u) for u ~ N(mean, exp(log_std)^2), summed over dimensions.
double squashed_gaussian_log_prob(const nn::Vector& mean, const nn::Vector& log_std,
                                  const nn::Vector& pre_tanh);

/// Gaussian policy head: the network emits [mean; log_std].
class Actor {
 public:
  Actor(int obs_dim, int act_dim, const std::vector<int>& hidden);

  const nn::Mlp& net() const { return net_; }
  int obs_dim() const { return net_.input_size(); }
  int act_dim() const { return act_dim_; }

  struct Distribution {
    nn::Matrix mean;     // act_dim x B
    nn::Matrix log_std;  // clamped to [kLogStdMin, kLogStdMax]
  };
  Distribution distribution(const nn::ParameterSet& params, const nn::Matrix& obs) const;

 private:
  int act_dim_;
  nn::Mlp net_;
};

struct ActionSample {
  nn::Vector action;    // in [-1, 1]
  nn::Vector pre_tanh;
  double log_prob = 0.0;
};

/// Stochastic: tanh-squashed Gaussian sample (needs rng). Deterministic: tanh(mean).
ActionSample select_action(const Actor& actor, const nn::ParameterSet& params,
                           const nn::Vector& obs, bool stochastic, std::mt19937_64* rng);

/// Critic loss for one critic against constant targets, with optional gradients.
double critic_loss(const nn::Mlp& critic, const nn::ParameterSet& params,
                   const nn::Matrix& critic_input, const nn::Matrix& targets,
                   const nn::Vector& fractions, nn::ParameterSet* grads = nullptr);

/// Actor loss mean(alpha * log pi - mean critic quantile) for fixed reparameterization noise.
/// Also returns the per-sample log-probabilities.
struct ActorLoss {
  double loss = 0.0;
  nn::Vector log_prob;
};
ActorLoss actor_loss(const Actor& actor, const nn::ParameterSet& actor_params,
                     const nn::Mlp& critic, std::span<const nn::ParameterSet> critics,
                     const nn::Matrix& obs, const nn::Matrix& noise, double alpha,
                     nn::ParameterSet* grads = nullptr);

struct TrainDiagnostics {
  long update = 0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double alpha = 0.0;
  std::size_t buffer_size = 0;
};

nlohmann::json to_json(const TrainDiagnostics& d);

class TqcAgent {
 public:
  TqcAgent(int obs_dim, int act_dim, TqcConfig config, std::uint64_t seed);

  const TqcConfig& config() const { return config_; }
  const Actor& actor() const { return actor_; }
  const nn::Mlp& critic_net() const { return critic_net_; }
  const nn::ParameterSet& actor_params() const { return actor_params_; }
  const std::vector<nn::ParameterSet>& critics() const { return critics_; }
  const std::vector<nn::ParameterSet>& target_critics() const { return targets_; }
  double alpha() const;
  double target_entropy() const;
  long updates() const { return updates_; }
  std::mt19937_64& rng() { return rng_; }

  ActionSample act(const nn::Vector& obs, bool stochastic);

  /// Truncated target atoms (k*N x B) for a batch, using the target critics.
  nn::Matrix compute_targets(const Batch& batch);

  /// One critic, actor and temperature update followed by the soft target update.
  /// Returns nullopt (and changes nothing) if the buffer holds fewer than batch_size items.
  std::optional<TrainDiagnostics> train_step(const ReplayBuffer& buffer);

  /// Copies online critics into the targets with smoothing factor tau.
  void update_targets(double tau);

  nlohmann::json hyperparameters() const;
  nn::ParameterSet checkpoint_params() const;
  void save(const std::filesystem::path& path) const;
  /// Rebuilds an agent from a checkpoint written by save(). Throws nn::CheckpointError.
  static TqcAgent load(const std::filesystem::path& path);

 private:
  TqcConfig config_;
  int obs_dim_;
  int act_dim_;
  Actor actor_;
  nn::Mlp critic_net_;
  nn::ParameterSet actor_params_;
  std::vector<nn::ParameterSet> critics_;
  std::vector<nn::ParameterSet> targets_;
  nn::ParameterSet log_alpha_;
  nn::AdamState actor_opt_;
  std::vector<nn::AdamState> critic_opt_;
  nn::AdamState alpha_opt_;
  nn::Vector fractions_;
  std::mt19937_64 rng_;
  long updates_ = 0;
};

}  // namespace sdrl::tqc

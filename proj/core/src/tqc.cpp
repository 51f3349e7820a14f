#include "sdrl/tqc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sdrl/tape.hpp"

namespace sdrl::tqc {

using nn::Matrix;
using nn::Tape;
using nn::Var;
using nn::Vector;

namespace {

const double kHalfLogTwoPi = 0.5 * std::log(2.0 * std::numbers::pi);
const double kLogTwo = std::log(2.0);

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

// log(1 - tanh(u)^2) without cancellation
double log_tanh_jacobian(double u) { return 2.0 * (kLogTwo - u - softplus(-2.0 * u)); }

Matrix gaussian_noise(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = normal(rng);
  }
  return m;
}

Matrix stack(const Matrix& top, const Matrix& bottom) {
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

}  // namespace

void TqcConfig::validate() const {
  if (n_critics < 1) throw ConfigError("tqc: n_critics must be >= 1");
  if (quantiles_per_critic < 1) throw ConfigError("tqc: quantiles_per_critic must be >= 1");
  if (dropped_per_critic < 0 || dropped_per_critic >= quantiles_per_critic) {
    throw ConfigError("tqc: dropped_per_critic must satisfy 0 <= d < M");
  }
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("tqc: gamma must be in (0, 1)");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tqc: tau must be in (0, 1]");
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0) || !(alpha_lr > 0.0)) {
    throw ConfigError("tqc: learning rates must be positive");
  }
  if (batch_size < 1 || replay_capacity < 1 || warmup_steps < 0) {
    throw ConfigError("tqc: batch_size, replay_capacity must be positive, warmup_steps >= 0");
  }
  if (hidden.empty() || std::any_of(hidden.begin(), hidden.end(), [](int h) { return h < 1; })) {
    throw ConfigError("tqc: hidden widths must be a non-empty list of positive sizes");
  }
  if (train_freq < 1 || gradient_steps < 1) throw ConfigError("tqc: train_freq and gradient_steps must be >= 1");
  if (!(initial_alpha > 0.0)) throw ConfigError("tqc: initial_alpha must be positive");
}

nlohmann::json to_json(const TqcConfig& c) {
  nlohmann::json j{{"n_critics", c.n_critics},
                   {"quantiles_per_critic", c.quantiles_per_critic},
                   {"dropped_per_critic", c.dropped_per_critic},
                   {"gamma", c.gamma},
                   {"tau", c.tau},
                   {"actor_lr", c.actor_lr},
                   {"critic_lr", c.critic_lr},
                   {"alpha_lr", c.alpha_lr},
                   {"batch_size", c.batch_size},
                   {"replay_capacity", c.replay_capacity},
                   {"warmup_steps", c.warmup_steps},
                   {"hidden", c.hidden},
                   {"train_freq", c.train_freq},
                   {"gradient_steps", c.gradient_steps},
                   {"initial_alpha", c.initial_alpha}};
  j["target_entropy"] = c.target_entropy ? nlohmann::json(*c.target_entropy) : nlohmann::json();
  return j;
}

TqcConfig tqc_config_from_json(const nlohmann::json& j) {
  TqcConfig c;
  c.n_critics = j.at("n_critics").get<int>();
  c.quantiles_per_critic = j.at("quantiles_per_critic").get<int>();
  c.dropped_per_critic = j.at("dropped_per_critic").get<int>();
  c.gamma = j.at("gamma").get<double>();
  c.tau = j.at("tau").get<double>();
  c.actor_lr = j.at("actor_lr").get<double>();
  c.critic_lr = j.at("critic_lr").get<double>();
  c.alpha_lr = j.at("alpha_lr").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.replay_capacity = j.at("replay_capacity").get<std::size_t>();
  c.warmup_steps = j.at("warmup_steps").get<int>();
  c.hidden = j.at("hidden").get<std::vector<int>>();
  c.train_freq = j.at("train_freq").get<int>();
  c.gradient_steps = j.at("gradient_steps").get<int>();
  c.initial_alpha = j.at("initial_alpha").get<double>();
  if (!j.at("target_entropy").is_null()) c.target_entropy = j.at("target_entropy").get<double>();
  c.validate();
  return c;
}

Vector quantile_fractions(int m) {
  if (m < 1) throw std::invalid_argument("quantile_fractions: need at least one quantile");
  Vector taus(m);
  for (int i = 0; i < m; ++i) taus[i] = (2.0 * (i + 1) - 1.0) / (2.0 * m);
  return taus;
}

std::vector<double> truncated_target(std::span<const double> pooled_atoms, int n_critics,
                                     int quantiles_per_critic, int dropped_per_critic,
                                     double reward, bool terminated, double gamma,
                                     double entropy_term) {
  if (dropped_per_critic < 0 || dropped_per_critic >= quantiles_per_critic) {
    throw ConfigError("truncated_target: dropped_per_critic must satisfy 0 <= d < M");
  }
  if (n_critics < 1 ||
      pooled_atoms.size() != static_cast<std::size_t>(n_critics) * quantiles_per_critic) {
    throw std::invalid_argument("truncated_target: expected N*M atoms");
  }
  std::vector<double> atoms(pooled_atoms.begin(), pooled_atoms.end());
  const std::size_t keep =
      static_cast<std::size_t>(quantiles_per_critic - dropped_per_critic) * n_critics;
  std::partial_sort(atoms.begin(), atoms.begin() + static_cast<std::ptrdiff_t>(keep), atoms.end());
  atoms.resize(keep);
  const double bootstrap = terminated ? 0.0 : gamma;
  for (double& z : atoms) z = reward + bootstrap * (z - entropy_term);
  return atoms;
}

double quantile_huber_loss(std::span<const double> predicted, std::span<const double> targets,
                           std::span<const double> fractions) {
  if (predicted.size() != fractions.size() || predicted.empty() || targets.empty()) {
    throw std::invalid_argument("quantile_huber_loss: size mismatch");
  }
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (!(fractions[i] > 0.0 && fractions[i] < 1.0) || (i > 0 && !(fractions[i] > fractions[i - 1]))) {
      throw std::invalid_argument("quantile_huber_loss: fractions must increase inside (0, 1)");
    }
  }
  constexpr double kappa = 1.0;
  double total = 0.0;
  for (std::size_t m = 0; m < predicted.size(); ++m) {
    for (double t : targets) {
      const double u = t - predicted[m];
      const double au = std::abs(u);
      const double huber = au <= kappa ? 0.5 * u * u : kappa * (au - 0.5 * kappa);
      total += std::abs(fractions[m] - (u < 0.0 ? 1.0 : 0.0)) * huber / kappa;
    }
  }
  return total / static_cast<double>(predicted.size() * targets.size());
}

double squashed_gaussian_log_prob(const Vector& mean, const Vector& log_std, const Vector& pre_tanh) {
  double lp = 0.0;
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double z = (pre_tanh[i] - mean[i]) / std::exp(log_std[i]);
    lp += -0.5 * z * z - log_std[i] - kHalfLogTwoPi - log_tanh_jacobian(pre_tanh[i]);
  }
  return lp;
}

Actor::Actor(int obs_dim, int act_dim, const std::vector<int>& hidden)
    : act_dim_(act_dim), net_([&] {
        std::vector<int> w{obs_dim};
        w.insert(w.end(), hidden.begin(), hidden.end());
        w.push_back(2 * act_dim);
        return nn::Mlp(std::move(w));
      }()) {
  if (act_dim < 1) throw std::invalid_argument("Actor: act_dim must be >= 1");
}

Actor::Distribution Actor::distribution(const nn::ParameterSet& params, const Matrix& obs) const {
  const Matrix out = net_.forward(params, obs);
  Distribution d;
  d.mean = out.topRows(act_dim_);
  d.log_std = out.bottomRows(act_dim_).cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  return d;
}

ActionSample select_action(const Actor& actor, const nn::ParameterSet& params, const Vector& obs,
                           bool stochastic, std::mt19937_64* rng) {
  const auto dist = actor.distribution(params, Matrix(obs));
  const Vector mean = dist.mean.col(0);
  const Vector log_std = dist.log_std.col(0);
  ActionSample s;
  if (stochastic) {
    if (rng == nullptr) throw std::invalid_argument("select_action: stochastic sampling needs an rng");
    const Vector eps = gaussian_noise(mean.size(), 1, *rng).col(0);
    s.pre_tanh = mean + log_std.array().exp().matrix().cwiseProduct(eps);
  } else {
    s.pre_tanh = mean;
  }
  s.action = s.pre_tanh.array().tanh().matrix();
  s.log_prob = squashed_gaussian_log_prob(mean, log_std, s.pre_tanh);
  return s;
}

double critic_loss(const nn::Mlp& critic, const nn::ParameterSet& params, const Matrix& critic_input,
                   const Matrix& targets, const Vector& fractions, nn::ParameterSet* grads) {
  Tape tape;
  const auto leaves = tape.bind(params);
  const Var z = critic.forward(leaves, tape.constant(critic_input));
  const Var loss = nn::quantile_huber(z, targets, fractions);
  if (grads != nullptr) {
    tape.backward(loss);
    *grads = tape.gradients(leaves, params);
  }
  return loss.value()(0, 0);
}

ActorLoss actor_loss(const Actor& actor, const nn::ParameterSet& actor_params, const nn::Mlp& critic,
                     std::span<const nn::ParameterSet> critics, const Matrix& obs, const Matrix& noise,
                     double alpha, nn::ParameterSet* grads) {
  const Eigen::Index a = actor.act_dim();
  if (noise.rows() != a || noise.cols() != obs.cols()) {
    throw std::invalid_argument("actor_loss: noise must be act_dim x batch");
  }
  if (critics.empty()) throw std::invalid_argument("actor_loss: need at least one critic");
  Tape tape;
  const auto leaves = tape.bind(actor_params);
  const Var obs_v = tape.constant(obs);
  const Var out = actor.net().forward(leaves, obs_v);
  const Var mean = nn::rows(out, 0, a);
  const Var log_std = nn::clamp(nn::rows(out, a, a), kLogStdMin, kLogStdMax);
  const Var u = nn::add(mean, nn::mul(nn::exp(log_std), tape.constant(noise)));
  const Var action = nn::tanh(u);

  // log N(u; mean, std) with (u - mean) / std == noise
  const Matrix gauss_const = (-0.5 * noise.array().square() - kHalfLogTwoPi).matrix();
  const Var gauss = nn::sub(tape.constant(gauss_const), log_std);
  const Var jac = nn::add_scalar(nn::scale(nn::add(u, nn::softplus(nn::scale(u, -2.0))), -2.0),
                                 2.0 * kLogTwo);
  const Var log_prob = nn::sub(nn::col_sum(gauss), nn::col_sum(jac));

  const Var critic_in = nn::concat_rows(obs_v, action);
  Var q;
  for (std::size_t i = 0; i < critics.size(); ++i) {
    std::vector<Var> frozen;
    for (std::size_t p = 0; p < critics[i].size(); ++p) frozen.push_back(tape.constant(critics[i][p]));
    const Var qi = nn::col_mean(critic.forward(frozen, critic_in));
    q = i == 0 ? qi : nn::add(q, qi);
  }
  q = nn::scale(q, 1.0 / static_cast<double>(critics.size()));
  const Var loss = nn::mean(nn::sub(nn::scale(log_prob, alpha), q));

  ActorLoss result;
  result.loss = loss.value()(0, 0);
  result.log_prob = log_prob.value().row(0).transpose();
  if (grads != nullptr) {
    tape.backward(loss);
    *grads = tape.gradients(leaves, actor_params);
  }
  return result;
}

nlohmann::json to_json(const TrainDiagnostics& d) {
  return nlohmann::json{{"update", d.update},
                        {"critic_loss", d.critic_loss},
                        {"actor_loss", d.actor_loss},
                        {"alpha", d.alpha},
                        {"buffer_size", d.buffer_size}};
}

TqcAgent::TqcAgent(int obs_dim, int act_dim, TqcConfig config, std::uint64_t seed)
    : config_((config.validate(), std::move(config))),
      obs_dim_(obs_dim),
      act_dim_(act_dim),
      actor_(obs_dim, act_dim, config_.hidden),
      critic_net_([&] {
        std::vector<int> w{obs_dim + act_dim};
        w.insert(w.end(), config_.hidden.begin(), config_.hidden.end());
        w.push_back(config_.quantiles_per_critic);
        return nn::Mlp(std::move(w));
      }()),
      actor_params_([&] {
        std::mt19937_64 init(seed);
        return actor_.net().init(init);
      }()),
      log_alpha_([&] {
        nn::ParameterSet p;
        p.add("log_alpha", Matrix::Constant(1, 1, std::log(config_.initial_alpha)));
        return p;
      }()),
      actor_opt_(actor_params_),
      alpha_opt_(log_alpha_),
      fractions_(quantile_fractions(config_.quantiles_per_critic)),
      rng_(seed ^ 0x9e3779b97f4a7c15ULL) {
  std::mt19937_64 init(seed + 1);
  for (int i = 0; i < config_.n_critics; ++i) {
    critics_.push_back(critic_net_.init(init));
    targets_.push_back(critics_.back());
    critic_opt_.emplace_back(critics_.back());
  }
}

double TqcAgent::alpha() const { return std::exp(log_alpha_[0](0, 0)); }

double TqcAgent::target_entropy() const {
  return config_.target_entropy.value_or(-static_cast<double>(act_dim_));
}

ActionSample TqcAgent::act(const Vector& obs, bool stochastic) {
  return select_action(actor_, actor_params_, obs, stochastic, &rng_);
}

Matrix TqcAgent::compute_targets(const Batch& batch) {
  const Eigen::Index b = batch.observations.cols();
  const auto dist = actor_.distribution(actor_params_, batch.next_observations);
  const Matrix noise = gaussian_noise(act_dim_, b, rng_);
  const Matrix u = dist.mean + dist.log_std.array().exp().matrix().cwiseProduct(noise);
  const Matrix next_action = u.array().tanh().matrix();
  const Matrix next_in = stack(batch.next_observations, next_action);

  const int n = config_.n_critics, m = config_.quantiles_per_critic;
  std::vector<Matrix> z;
  z.reserve(n);
  for (const auto& t : targets_) z.push_back(critic_net_.forward(t, next_in));

  const double a = alpha();
  Matrix targets(static_cast<Eigen::Index>(config_.kept_per_critic()) * n, b);
  std::vector<double> pooled(static_cast<std::size_t>(n) * m);
  for (Eigen::Index c = 0; c < b; ++c) {
    for (int i = 0; i < n; ++i) {
      for (int q = 0; q < m; ++q) pooled[static_cast<std::size_t>(i) * m + q] = z[i](q, c);
    }
    const double log_prob = squashed_gaussian_log_prob(dist.mean.col(c), dist.log_std.col(c), u.col(c));
    const auto kept = truncated_target(pooled, n, m, config_.dropped_per_critic, batch.rewards[c],
                                       batch.terminated[c] != 0.0, config_.gamma, a * log_prob);
    for (std::size_t k = 0; k < kept.size(); ++k) targets(static_cast<Eigen::Index>(k), c) = kept[k];
  }
  return targets;
}

void TqcAgent::update_targets(double tau) {
  for (std::size_t i = 0; i < critics_.size(); ++i) targets_[i].soft_update(critics_[i], tau);
}

std::optional<TrainDiagnostics> TqcAgent::train_step(const ReplayBuffer& buffer) {
  if (buffer.size() < static_cast<std::size_t>(config_.batch_size)) return std::nullopt;
  if (buffer.obs_dim() != obs_dim_ || buffer.act_dim() != act_dim_) {
    throw std::invalid_argument("train_step: buffer dimensions do not match the agent");
  }
  const Batch batch = buffer.sample(static_cast<std::size_t>(config_.batch_size), rng_);
  TrainDiagnostics diag;

  const Matrix targets = compute_targets(batch);
  const Matrix critic_in = stack(batch.observations, batch.actions);
  nn::AdamOptions critic_opts;
  critic_opts.lr = config_.critic_lr;
  for (std::size_t i = 0; i < critics_.size(); ++i) {
    nn::ParameterSet grads;
    diag.critic_loss += critic_loss(critic_net_, critics_[i], critic_in, targets, fractions_, &grads);
    nn::adam_update(critics_[i], grads, critic_opt_[i], critic_opts);
  }
  diag.critic_loss /= static_cast<double>(critics_.size());

  const double a = alpha();
  const Matrix noise = gaussian_noise(act_dim_, batch.observations.cols(), rng_);
  nn::ParameterSet actor_grads;
  const auto al = actor_loss(actor_, actor_params_, critic_net_, critics_, batch.observations, noise,
                             a, &actor_grads);
  nn::AdamOptions actor_opts;
  actor_opts.lr = config_.actor_lr;
  nn::adam_update(actor_params_, actor_grads, actor_opt_, actor_opts);
  diag.actor_loss = al.loss;

  // d/d(log_alpha) of -log_alpha * mean(log_prob + target_entropy)
  nn::ParameterSet alpha_grad = log_alpha_.zeros_like();
  alpha_grad.mutable_at(0)(0, 0) = -(al.log_prob.array() + target_entropy()).mean();
  nn::AdamOptions alpha_opts;
  alpha_opts.lr = config_.alpha_lr;
  nn::adam_update(log_alpha_, alpha_grad, alpha_opt_, alpha_opts);

  update_targets(config_.tau);
  diag.update = ++updates_;
  diag.alpha = alpha();
  diag.buffer_size = buffer.size();
  return diag;
}

nlohmann::json TqcAgent::hyperparameters() const {
  return nlohmann::json{{"format", "sdrl-tqc"},
                        {"obs_dim", obs_dim_},
                        {"act_dim", act_dim_},
                        {"updates", updates_},
                        {"tqc", to_json(config_)}};
}

nn::ParameterSet TqcAgent::checkpoint_params() const {
  nn::ParameterSet all;
  all.append(actor_params_, "actor/");
  for (std::size_t i = 0; i < critics_.size(); ++i) {
    all.append(critics_[i], "critic" + std::to_string(i) + "/");
    all.append(targets_[i], "target" + std::to_string(i) + "/");
  }
  all.append(log_alpha_, "");
  return all;
}

void TqcAgent::save(const std::filesystem::path& path) const {
  nn::save_checkpoint(path, checkpoint_params(), hyperparameters());
}

TqcAgent TqcAgent::load(const std::filesystem::path& path) {
  const auto ck = nn::load_checkpoint(path);
  try {
    const auto& h = ck.hyperparameters;
    if (h.value("format", "") != "sdrl-tqc") throw nn::CheckpointError("not a TQC agent checkpoint");
    TqcAgent agent(h.at("obs_dim").get<int>(), h.at("act_dim").get<int>(),
                   tqc_config_from_json(h.at("tqc")), 0);
    auto restore = [&](nn::ParameterSet& dst, const std::string& prefix) {
      const auto src = ck.params.extract(prefix);
      if (!dst.same_shapes(src)) throw nn::CheckpointError("checkpoint shapes do not match " + prefix);
      dst.assign(src);
    };
    restore(agent.actor_params_, "actor/");
    for (std::size_t i = 0; i < agent.critics_.size(); ++i) {
      restore(agent.critics_[i], "critic" + std::to_string(i) + "/");
      restore(agent.targets_[i], "target" + std::to_string(i) + "/");
    }
    const auto la = ck.params.index_of("log_alpha");
    if (!la) throw nn::CheckpointError("checkpoint lacks log_alpha");
    agent.log_alpha_.mutable_at(0) = ck.params[*la];
    agent.updates_ = h.value("updates", 0L);
    return agent;
  } catch (const nlohmann::json::exception& e) {
    throw nn::CheckpointError(std::string("bad checkpoint hyperparameters: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw nn::CheckpointError(e.what());
  }
}

}  // namespace sdrl::tqc

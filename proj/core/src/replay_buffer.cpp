#include "sdrl/replay_buffer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sdrl::tqc {

namespace {

bool finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void store(std::vector<double>& dst, std::size_t slot, std::span<const double> src) {
  const std::size_t at = slot * src.size();
  if (dst.size() < at + src.size()) dst.resize(at + src.size());
  std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(at));
}

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity, int obs_dim, int act_dim)
    : capacity_(capacity), obs_dim_(obs_dim), act_dim_(act_dim) {
  if (capacity == 0 || obs_dim < 1 || act_dim < 1) {
    throw std::invalid_argument("ReplayBuffer: capacity and dimensions must be positive");
  }
}

void ReplayBuffer::add(const Transition& t) {
  if (t.observation.size() != static_cast<std::size_t>(obs_dim_) ||
      t.next_observation.size() != static_cast<std::size_t>(obs_dim_) ||
      t.action.size() != static_cast<std::size_t>(act_dim_)) {
    throw std::invalid_argument("ReplayBuffer::add: dimension mismatch");
  }
  if (!finite(t.observation) || !finite(t.next_observation) || !finite(t.action) ||
      !std::isfinite(t.reward)) {
    throw std::invalid_argument("ReplayBuffer::add: non-finite transition");
  }
  store(obs_, head_, t.observation);
  store(next_obs_, head_, t.next_observation);
  store(act_, head_, t.action);
  const double r[1] = {t.reward};
  const double d[1] = {t.terminated ? 1.0 : 0.0};
  store(reward_, head_, r);
  store(terminated_, head_, d);
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, std::mt19937_64& rng) const {
  if (size_ == 0) throw std::logic_error("ReplayBuffer: sampling from an empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

Batch ReplayBuffer::gather(std::span<const std::size_t> indices) const {
  const auto n = static_cast<Eigen::Index>(indices.size());
  Batch b;
  b.observations.resize(obs_dim_, n);
  b.next_observations.resize(obs_dim_, n);
  b.actions.resize(act_dim_, n);
  b.rewards.resize(n);
  b.terminated.resize(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const std::size_t i = indices[static_cast<std::size_t>(c)];
    if (i >= size_) throw std::out_of_range("ReplayBuffer::gather: index out of range");
    for (int r = 0; r < obs_dim_; ++r) {
      b.observations(r, c) = obs_[i * obs_dim_ + r];
      b.next_observations(r, c) = next_obs_[i * obs_dim_ + r];
    }
    for (int r = 0; r < act_dim_; ++r) b.actions(r, c) = act_[i * act_dim_ + r];
    b.rewards[c] = reward_[i];
    b.terminated[c] = terminated_[i];
  }
  b.indices.assign(indices.begin(), indices.end());
  return b;
}

Batch ReplayBuffer::sample(std::size_t n, std::mt19937_64& rng) const {
  const auto idx = sample_indices(n, rng);
  return gather(idx);
}

Transition ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("ReplayBuffer::at: index out of range");
  Transition t;
  t.observation.assign(obs_.begin() + i * obs_dim_, obs_.begin() + (i + 1) * obs_dim_);
  t.next_observation.assign(next_obs_.begin() + i * obs_dim_, next_obs_.begin() + (i + 1) * obs_dim_);
  t.action.assign(act_.begin() + i * act_dim_, act_.begin() + (i + 1) * act_dim_);
  t.reward = reward_[i];
  t.terminated = terminated_[i] != 0.0;
  return t;
}

}  // namespace sdrl::tqc

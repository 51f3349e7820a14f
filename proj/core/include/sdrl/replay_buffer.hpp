#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "sdrl/nn.hpp"

namespace sdrl::tqc {

struct Transition {
  std::vector<double> observation;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_observation;
  bool terminated = false;
};

/// Column-per-sample minibatch.
struct Batch {
  nn::Matrix observations;
  nn::Matrix actions;
  nn::Vector rewards;
  nn::Matrix next_observations;
  nn::Vector terminated;  // 1.0 or 0.0
  std::vector<std::size_t> indices;
};

/// Fixed-capacity ring of transitions with uniform sampling. Storage grows on demand.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int obs_dim, int act_dim);

  /// Throws std::invalid_argument on wrong dimensions or non-finite values.
  void add(const Transition& t);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }

  std::vector<std::size_t> sample_indices(std::size_t n, std::mt19937_64& rng) const;
  Batch gather(std::span<const std::size_t> indices) const;
  /// Throws std::logic_error if the buffer is empty.
  Batch sample(std::size_t n, std::mt19937_64& rng) const;

  Transition at(std::size_t index) const;

 private:
  std::size_t capacity_;
  int obs_dim_;
  int act_dim_;
  std::size_t size_ = 0;
  std::size_t head_ = 0;
  std::vector<double> obs_, act_, next_obs_, reward_, terminated_;
};

}  // namespace sdrl::tqc

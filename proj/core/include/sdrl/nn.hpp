#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace sdrl::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Named, fixed-shape tensors. Values may change, shapes may not.
class ParameterSet {
 public:
  /// Throws std::invalid_argument on duplicate names or non-finite values.
  std::size_t add(std::string name, Matrix value);

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  std::size_t total_size() const;

  const Matrix& operator[](std::size_t i) const { return values_.at(i); }
  Eigen::Map<Matrix> mutable_at(std::size_t i);
  const std::string& name(std::size_t i) const { return names_.at(i); }
  std::optional<std::size_t> index_of(const std::string& name) const;

  bool same_shapes(const ParameterSet& other) const;
  ParameterSet zeros_like() const;

  /// Copies values from a set with identical shapes.
  void assign(const ParameterSet& other);
  /// this = (1 - tau) * this + tau * online.
  void soft_update(const ParameterSet& online, double tau);

  /// Adds every tensor of `other` under `prefix + name`.
  void append(const ParameterSet& other, const std::string& prefix);
  /// Tensors whose names start with `prefix`, with the prefix stripped.
  ParameterSet extract(const std::string& prefix) const;

  bool all_finite() const;

 private:
  void require_same_shapes(const ParameterSet& other, const char* where) const;

  std::vector<std::string> names_;
  std::vector<Matrix> values_;
};

class Tape;
class Var;

enum class Activation { Identity, Relu, Tanh };

/// Dense feed-forward network. Batches are column-major: one column per sample.
class Mlp {
 public:
  /// `widths` includes input and output sizes and needs at least one hidden layer.
  explicit Mlp(std::vector<int> widths, Activation hidden = Activation::Relu,
               Activation output = Activation::Identity);

  int input_size() const { return widths_.front(); }
  int output_size() const { return widths_.back(); }
  int num_layers() const { return static_cast<int>(widths_.size()) - 1; }
  const std::vector<int>& widths() const { return widths_; }
  Activation hidden_activation() const { return hidden_; }
  Activation output_activation() const { return output_; }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases, named "l<i>.w" / "l<i>.b".
  ParameterSet init(std::mt19937_64& rng) const;
  ParameterSet zeros() const;

  /// Throws std::invalid_argument if `params` does not fit this architecture.
  void check(const ParameterSet& params) const;

  Vector forward(const ParameterSet& params, const Vector& input) const;
  Matrix forward(const ParameterSet& params, const Matrix& batch) const;
  /// Differentiable forward; `params` are the tape leaves bound to a ParameterSet of this net.
  Var forward(std::span<const Var> params, const Var& batch) const;

 private:
  std::vector<int> widths_;
  Activation hidden_;
  Activation output_;
};

struct AdamOptions {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  explicit AdamState(const ParameterSet& like) : m(like.zeros_like()), v(like.zeros_like()) {}
  ParameterSet m;
  ParameterSet v;
  long step = 0;
};

/// Bias-corrected adaptive-moment step. Throws std::invalid_argument on shape mismatch.
void adam_update(ParameterSet& params, const ParameterSet& grads, AdamState& state,
                 const AdamOptions& options = {});

}  // namespace sdrl::nn

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "sdrl/nn.hpp"

namespace sdrl::nn {

/// Handle to a node recorded on a Tape. Valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  /// Gradient of the last backward() target; zero-shaped if the node never received one.
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode autodiff over dense matrices. Nodes are recorded in evaluation order, so a
/// reverse sweep visits them topologically.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Differentiable leaf.
  Var leaf(Matrix value);
  /// One leaf per tensor, in order.
  std::vector<Var> bind(const ParameterSet& params);

  /// Seeds d(loss)/d(loss) = 1 and propagates. Throws std::invalid_argument unless loss is 1x1.
  void backward(const Var& loss);

  /// Gradients of the leaves in `leaves`, shaped like `like`. Untouched leaves give zeros.
  ParameterSet gradients(std::span<const Var> leaves, const ParameterSet& like) const;

  // Op-building interface.
  Var record(Matrix value, std::initializer_list<Var> parents, Backward backward);
  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  const Matrix& grad(std::size_t id) const { return nodes_[id].grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  void accumulate(std::size_t id, const Matrix& g);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
};

// Elementwise and linear-algebra ops. Operands must live on the same tape.
Var matmul(const Var& a, const Var& b);
Var add_bias(const Var& x, const Var& bias);  // bias is rows x 1, broadcast over columns
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var relu(const Var& a);
Var tanh(const Var& a);
Var exp(const Var& a);
Var softplus(const Var& a);
Var clamp(const Var& a, double lo, double hi);
Var activate(const Var& a, Activation act);
Var rows(const Var& a, Eigen::Index start, Eigen::Index count);
Var concat_rows(const Var& top, const Var& bottom);
Var sum(const Var& a);       // 1x1
Var mean(const Var& a);      // 1x1
Var col_sum(const Var& a);   // 1 x cols
Var col_mean(const Var& a);  // 1 x cols

/// Quantile Huber loss (kappa = 1) of `pred` (M x B) against constant `targets` (K x B), with
/// quantile fractions `taus` (M). Mean over all M*K*B pairs; 1x1.
Var quantile_huber(const Var& pred, const Matrix& targets, const Vector& taus);

}  // namespace sdrl::nn

#include "sdrl/tape.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sdrl::nn {

namespace {

Tape& same_tape(const Var& a, const Var& b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) {
    throw std::invalid_argument("tape op: operands recorded on different tapes");
  }
  return *a.tape();
}

Tape& tape_of(const Var& a) {
  if (a.tape() == nullptr) throw std::invalid_argument("tape op: unbound Var");
  return *a.tape();
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }
}

// Elementwise unary op whose local derivative is computed from input and output values.
template <typename Fwd, typename Deriv>
Var unary(const Var& a, Fwd fwd, Deriv deriv) {
  Tape& t = tape_of(a);
  const std::size_t in = a.id();
  return t.record(fwd(a.value()), {a}, [in, deriv](Tape& tp, std::size_t self) {
    tp.accumulate(in, tp.grad(self).cwiseProduct(deriv(tp.value(in), tp.value(self))));
  });
}

}  // namespace

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), false, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::leaf(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), true, nullptr});
  return Var(this, nodes_.size() - 1);
}

std::vector<Var> Tape::bind(const ParameterSet& params) {
  std::vector<Var> out;
  out.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) out.push_back(leaf(params[i]));
  return out;
}

Var Tape::record(Matrix value, std::initializer_list<Var> parents, Backward backward) {
  bool needs = false;
  for (const Var& p : parents) needs = needs || nodes_[p.id()].requires_grad;
  nodes_.push_back(Node{std::move(value), Matrix(), needs, needs ? std::move(backward) : nullptr});
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(std::size_t id, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(const Var& loss) {
  if (loss.tape() != this) throw std::invalid_argument("backward: Var from another tape");
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar (1x1)");
  }
  for (auto& n : nodes_) n.grad.resize(0, 0);
  if (!nodes_[loss.id()].requires_grad) return;
  nodes_[loss.id()].grad = Matrix::Ones(1, 1);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward && n.grad.size() != 0) n.backward(*this, i);
  }
}

ParameterSet Tape::gradients(std::span<const Var> leaves, const ParameterSet& like) const {
  if (leaves.size() != like.size()) throw std::invalid_argument("gradients: leaf count mismatch");
  ParameterSet out = like.zeros_like();
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    const Matrix& g = nodes_[leaves[i].id()].grad;
    if (g.size() == 0) continue;
    if (g.rows() != like[i].rows() || g.cols() != like[i].cols()) {
      throw std::invalid_argument("gradients: shape mismatch for " + like.name(i));
    }
    out.mutable_at(i) = g;
  }
  return out;
}

Var matmul(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(a.value() * b.value(), {a, b}, [ia, ib](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(ia)) tp.accumulate(ia, g * tp.value(ib).transpose());
    if (tp.requires_grad(ib)) tp.accumulate(ib, tp.value(ia).transpose() * g);
  });
}

Var add_bias(const Var& x, const Var& bias) {
  Tape& t = same_tape(x, bias);
  if (bias.cols() != 1 || bias.rows() != x.rows()) {
    throw std::invalid_argument("add_bias: bias must be rows x 1");
  }
  const std::size_t ix = x.id(), ib = bias.id();
  Matrix v = x.value().colwise() + bias.value().col(0);
  return t.record(std::move(v), {x, bias}, [ix, ib](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    tp.accumulate(ix, g);
    if (tp.requires_grad(ib)) tp.accumulate(ib, g.rowwise().sum());
  });
}

Var add(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a, b, "add");
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(a.value() + b.value(), {a, b}, [ia, ib](Tape& tp, std::size_t self) {
    tp.accumulate(ia, tp.grad(self));
    tp.accumulate(ib, tp.grad(self));
  });
}

Var sub(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a, b, "sub");
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(a.value() - b.value(), {a, b}, [ia, ib](Tape& tp, std::size_t self) {
    tp.accumulate(ia, tp.grad(self));
    if (tp.requires_grad(ib)) tp.accumulate(ib, -tp.grad(self));
  });
}

Var mul(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a, b, "mul");
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(a.value().cwiseProduct(b.value()), {a, b}, [ia, ib](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(ia)) tp.accumulate(ia, g.cwiseProduct(tp.value(ib)));
    if (tp.requires_grad(ib)) tp.accumulate(ib, g.cwiseProduct(tp.value(ia)));
  });
}

Var scale(const Var& a, double s) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  return t.record(a.value() * s, {a}, [ia, s](Tape& tp, std::size_t self) {
    tp.accumulate(ia, tp.grad(self) * s);
  });
}

Var add_scalar(const Var& a, double s) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  Matrix v = a.value().array() + s;
  return t.record(std::move(v), {a}, [ia](Tape& tp, std::size_t self) {
    tp.accumulate(ia, tp.grad(self));
  });
}

Var relu(const Var& a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.cwiseMax(0.0); },
      [](const Matrix& x, const Matrix&) -> Matrix {
        return (x.array() > 0.0).cast<double>().matrix();
      });
}

Var tanh(const Var& a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.array().tanh().matrix(); },
      [](const Matrix&, const Matrix& y) -> Matrix {
        return (1.0 - y.array().square()).matrix();
      });
}

Var exp(const Var& a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.array().exp().matrix(); },
      [](const Matrix&, const Matrix& y) -> Matrix { return y; });
}

Var softplus(const Var& a) {
  return unary(
      a,
      [](const Matrix& x) -> Matrix {
        // log(1 + e^x) = max(x, 0) + log1p(e^-|x|)
        return x.unaryExpr([](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); });
      },
      [](const Matrix& x, const Matrix&) -> Matrix {
        return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
      });
}

Var clamp(const Var& a, double lo, double hi) {
  return unary(
      a, [lo, hi](const Matrix& x) -> Matrix { return x.cwiseMax(lo).cwiseMin(hi); },
      [lo, hi](const Matrix& x, const Matrix&) -> Matrix {
        return ((x.array() >= lo) && (x.array() <= hi)).cast<double>().matrix();
      });
}

Var activate(const Var& a, Activation act) {
  switch (act) {
    case Activation::Relu: return relu(a);
    case Activation::Tanh: return tanh(a);
    case Activation::Identity: break;
  }
  return a;
}

Var rows(const Var& a, Eigen::Index start, Eigen::Index count) {
  Tape& t = tape_of(a);
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw std::invalid_argument("rows: slice out of range");
  }
  const std::size_t ia = a.id();
  const Eigen::Index total = a.rows();
  Matrix v = a.value().middleRows(start, count);
  return t.record(std::move(v), {a}, [ia, start, count, total](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    Matrix full = Matrix::Zero(total, g.cols());
    full.middleRows(start, count) = g;
    tp.accumulate(ia, full);
  });
}

Var concat_rows(const Var& top, const Var& bottom) {
  Tape& t = same_tape(top, bottom);
  if (top.cols() != bottom.cols()) throw std::invalid_argument("concat_rows: column mismatch");
  const std::size_t it = top.id(), ib = bottom.id();
  const Eigen::Index rt = top.rows(), rb = bottom.rows();
  Matrix v(rt + rb, top.cols());
  v << top.value(), bottom.value();
  return t.record(std::move(v), {top, bottom}, [it, ib, rt, rb](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(it)) tp.accumulate(it, g.topRows(rt));
    if (tp.requires_grad(ib)) tp.accumulate(ib, g.bottomRows(rb));
  });
}

Var sum(const Var& a) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  const Eigen::Index r = a.rows(), c = a.cols();
  return t.record(Matrix::Constant(1, 1, a.value().sum()), {a}, [ia, r, c](Tape& tp, std::size_t self) {
    tp.accumulate(ia, Matrix::Constant(r, c, tp.grad(self)(0, 0)));
  });
}

Var mean(const Var& a) {
  if (a.value().size() == 0) throw std::invalid_argument("mean: empty operand");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var col_sum(const Var& a) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  const Eigen::Index r = a.rows();
  Matrix v = a.value().colwise().sum();
  return t.record(std::move(v), {a}, [ia, r](Tape& tp, std::size_t self) {
    tp.accumulate(ia, tp.grad(self).replicate(r, 1));
  });
}

Var col_mean(const Var& a) {
  if (a.rows() == 0) throw std::invalid_argument("col_mean: no rows");
  return scale(col_sum(a), 1.0 / static_cast<double>(a.rows()));
}

Var quantile_huber(const Var& pred, const Matrix& targets, const Vector& taus) {
  Tape& t = tape_of(pred);
  const Eigen::Index m = pred.rows(), b = pred.cols(), k = targets.rows();
  if (targets.cols() != b || taus.size() != m || k == 0 || m == 0 || b == 0) {
    throw std::invalid_argument("quantile_huber: shape mismatch");
  }
  constexpr double kappa = 1.0;
  const double norm = 1.0 / static_cast<double>(m * k * b);
  const Matrix& p = pred.value();

  double total = 0.0;
  Matrix dpred = Matrix::Zero(m, b);
  for (Eigen::Index col = 0; col < b; ++col) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const double tau = taus[i];
      const double pi = p(i, col);
      double g = 0.0;
      for (Eigen::Index j = 0; j < k; ++j) {
        const double u = targets(j, col) - pi;
        const double w = std::abs(tau - (u < 0.0 ? 1.0 : 0.0));
        const double au = std::abs(u);
        const double huber = au <= kappa ? 0.5 * u * u : kappa * (au - 0.5 * kappa);
        const double dhuber = au <= kappa ? u : kappa * (u > 0.0 ? 1.0 : -1.0);
        total += w * huber / kappa;
        // du/dpred = -1
        g -= w * dhuber / kappa;
      }
      dpred(i, col) = g * norm;
    }
  }
  const std::size_t ip = pred.id();
  return t.record(Matrix::Constant(1, 1, total * norm), {pred},
                  [ip, dpred = std::move(dpred)](Tape& tp, std::size_t self) {
                    tp.accumulate(ip, dpred * tp.grad(self)(0, 0));
                  });
}

}  // namespace sdrl::nn

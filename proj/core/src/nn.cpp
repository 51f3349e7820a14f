#include "sdrl/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sdrl/tape.hpp"

namespace sdrl::nn {

std::size_t ParameterSet::add(std::string name, Matrix value) {
  if (index_of(name)) throw std::invalid_argument("ParameterSet: duplicate name " + name);
  if (!value.allFinite()) throw std::invalid_argument("ParameterSet: non-finite values in " + name);
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  return values_.size() - 1;
}

std::size_t ParameterSet::total_size() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
  return n;
}

Eigen::Map<Matrix> ParameterSet::mutable_at(std::size_t i) {
  Matrix& m = values_.at(i);
  return Eigen::Map<Matrix>(m.data(), m.rows(), m.cols());
}

std::optional<std::size_t> ParameterSet::index_of(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

bool ParameterSet::same_shapes(const ParameterSet& other) const {
  if (other.size() != size()) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    if (values_[i].rows() != other.values_[i].rows() || values_[i].cols() != other.values_[i].cols()) {
      return false;
    }
  }
  return true;
}

void ParameterSet::require_same_shapes(const ParameterSet& other, const char* where) const {
  if (!same_shapes(other)) throw std::invalid_argument(std::string(where) + ": shape mismatch");
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet out;
  out.names_ = names_;
  out.values_.reserve(values_.size());
  for (const auto& v : values_) out.values_.push_back(Matrix::Zero(v.rows(), v.cols()));
  return out;
}

void ParameterSet::assign(const ParameterSet& other) {
  require_same_shapes(other, "ParameterSet::assign");
  for (std::size_t i = 0; i < size(); ++i) values_[i] = other.values_[i];
}

void ParameterSet::soft_update(const ParameterSet& online, double tau) {
  require_same_shapes(online, "ParameterSet::soft_update");
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("soft_update: tau must be in (0, 1]");
  for (std::size_t i = 0; i < size(); ++i) {
    values_[i] = (1.0 - tau) * values_[i] + tau * online.values_[i];
  }
}

void ParameterSet::append(const ParameterSet& other, const std::string& prefix) {
  for (std::size_t i = 0; i < other.size(); ++i) add(prefix + other.names_[i], other.values_[i]);
}

ParameterSet ParameterSet::extract(const std::string& prefix) const {
  ParameterSet out;
  for (std::size_t i = 0; i < size(); ++i) {
    if (names_[i].rfind(prefix, 0) == 0) out.add(names_[i].substr(prefix.size()), values_[i]);
  }
  return out;
}

bool ParameterSet::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](const Matrix& m) { return m.allFinite(); });
}

namespace {

Matrix apply(const Matrix& x, Activation act) {
  switch (act) {
    case Activation::Relu: return x.cwiseMax(0.0);
    case Activation::Tanh: return x.array().tanh().matrix();
    case Activation::Identity: break;
  }
  return x;
}

}  // namespace

Mlp::Mlp(std::vector<int> widths, Activation hidden, Activation output)
    : widths_(std::move(widths)), hidden_(hidden), output_(output) {
  if (widths_.size() < 3) throw std::invalid_argument("Mlp: need at least one hidden layer");
  if (std::any_of(widths_.begin(), widths_.end(), [](int w) { return w < 1; })) {
    throw std::invalid_argument("Mlp: widths must be >= 1");
  }
}

ParameterSet Mlp::init(std::mt19937_64& rng) const {
  ParameterSet p;
  for (int l = 0; l < num_layers(); ++l) {
    const int in = widths_[l], out = widths_[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix w(out, in);
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = dist(rng);
    }
    Matrix b(out, 1);
    for (Eigen::Index r = 0; r < b.rows(); ++r) b(r, 0) = dist(rng);
    p.add("l" + std::to_string(l) + ".w", std::move(w));
    p.add("l" + std::to_string(l) + ".b", std::move(b));
  }
  return p;
}

ParameterSet Mlp::zeros() const {
  ParameterSet p;
  for (int l = 0; l < num_layers(); ++l) {
    p.add("l" + std::to_string(l) + ".w", Matrix::Zero(widths_[l + 1], widths_[l]));
    p.add("l" + std::to_string(l) + ".b", Matrix::Zero(widths_[l + 1], 1));
  }
  return p;
}

void Mlp::check(const ParameterSet& params) const {
  if (params.size() != static_cast<std::size_t>(2 * num_layers())) {
    throw std::invalid_argument("Mlp: parameter count does not match the architecture");
  }
  for (int l = 0; l < num_layers(); ++l) {
    const Matrix& w = params[2 * l];
    const Matrix& b = params[2 * l + 1];
    if (w.rows() != widths_[l + 1] || w.cols() != widths_[l] || b.rows() != widths_[l + 1] ||
        b.cols() != 1) {
      throw std::invalid_argument("Mlp: parameter shape mismatch at layer " + std::to_string(l));
    }
  }
}

Vector Mlp::forward(const ParameterSet& params, const Vector& input) const {
  return forward(params, Matrix(input)).col(0);
}

Matrix Mlp::forward(const ParameterSet& params, const Matrix& batch) const {
  check(params);
  if (batch.rows() != input_size()) throw std::invalid_argument("Mlp::forward: input size mismatch");
  Matrix h = batch;
  for (int l = 0; l < num_layers(); ++l) {
    Matrix z = params[2 * l] * h;
    z.colwise() += params[2 * l + 1].col(0);
    h = apply(z, l + 1 == num_layers() ? output_ : hidden_);
  }
  return h;
}

Var Mlp::forward(std::span<const Var> params, const Var& batch) const {
  if (params.size() != static_cast<std::size_t>(2 * num_layers())) {
    throw std::invalid_argument("Mlp::forward: parameter count mismatch");
  }
  if (batch.rows() != input_size()) throw std::invalid_argument("Mlp::forward: input size mismatch");
  Var h = batch;
  for (int l = 0; l < num_layers(); ++l) {
    h = add_bias(matmul(params[2 * l], h), params[2 * l + 1]);
    h = activate(h, l + 1 == num_layers() ? output_ : hidden_);
  }
  return h;
}

void adam_update(ParameterSet& params, const ParameterSet& grads, AdamState& state,
                 const AdamOptions& o) {
  if (!params.same_shapes(grads) || !params.same_shapes(state.m) || !params.same_shapes(state.v)) {
    throw std::invalid_argument("adam_update: shape mismatch");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto m = state.m.mutable_at(i);
    auto v = state.v.mutable_at(i);
    const Matrix& g = grads[i];
    m = o.beta1 * m + (1.0 - o.beta1) * g;
    v = o.beta2 * v + (1.0 - o.beta2) * g.cwiseProduct(g);
    auto p = params.mutable_at(i);
    p.array() -= o.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + o.eps);
  }
}

}  // namespace sdrl::nn

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "oracles/finite_difference.hpp"
#include "oracles/straight_mlp.hpp"
#include "sdrl/checkpoint.hpp"
#include "sdrl/nn.hpp"
#include "sdrl/tape.hpp"

using namespace sdrl::nn;

namespace {

std::vector<oracle::DenseLayer> layers_of(const Mlp& net, const ParameterSet& p) {
  std::vector<oracle::DenseLayer> out;
  for (int l = 0; l < net.num_layers(); ++l) {
    oracle::DenseLayer L;
    L.in = net.widths()[l];
    L.out = net.widths()[l + 1];
    const Matrix& w = p[2 * l];
    for (int o = 0; o < L.out; ++o)
      for (int i = 0; i < L.in; ++i) L.w.push_back(w(o, i));
    for (int o = 0; o < L.out; ++o) L.b.push_back(p[2 * l + 1](o, 0));
    out.push_back(std::move(L));
  }
  return out;
}

}  // namespace

TEST(Mlp, RequiresHiddenLayerAndPositiveWidths) {
  EXPECT_THROW(Mlp({3, 2}), std::invalid_argument);
  EXPECT_THROW(Mlp({3, 0, 2}), std::invalid_argument);
}

TEST(Mlp, ZeroParametersGiveZeroOutput) {
  Mlp net({5, 7, 3});
  const Vector y = net.forward(net.zeros(), Vector(Vector::Random(5)));
  EXPECT_EQ(y, Vector::Zero(3));
}

TEST(Mlp, ShapeMismatchIsAnError) {
  Mlp net({5, 7, 3});
  std::mt19937_64 rng(1);
  EXPECT_THROW(net.forward(net.init(rng), Vector(Vector::Zero(4))), std::invalid_argument);
  Mlp other({5, 6, 3});
  EXPECT_THROW(net.check(other.zeros()), std::invalid_argument);
}

TEST(Mlp, AffineCaseMatchesHandMultiply) {
  Mlp net({2, 2, 1}, Activation::Identity, Activation::Identity);
  ParameterSet p = net.zeros();
  p.mutable_at(0) << 1.0, 2.0, 3.0, 4.0;
  p.mutable_at(1) << 0.5, -0.5;
  p.mutable_at(2) << 1.0, -1.0;
  p.mutable_at(3) << 0.25;
  Vector x(2);
  x << 1.0, 1.0;
  // hidden = (3.5, 6.5), out = 3.5 - 6.5 + 0.25
  EXPECT_DOUBLE_EQ(net.forward(p, x)[0], -2.75);
}

TEST(Mlp, MatchesStraightLineEvaluator) {
  std::mt19937_64 rng(31);
  for (auto out_act : {Activation::Identity, Activation::Tanh}) {
    Mlp net({6, 9, 5, 3}, Activation::Relu, out_act);
    const auto p = net.init(rng);
    const Vector x = Vector::Random(6);
    const Vector y = net.forward(p, x);
    const auto o = oracle::evaluate(layers_of(net, p), {x.data(), x.data() + x.size()}, oracle::Act::Relu,
                                    out_act == Activation::Tanh ? oracle::Act::Tanh : oracle::Act::Identity);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(y[i], o[i], 1e-13);
  }
}

TEST(Mlp, ForwardIsPure) {
  std::mt19937_64 rng(4);
  Mlp net({4, 8, 2});
  const auto p = net.init(rng);
  const Matrix x = Matrix::Random(4, 5);
  EXPECT_EQ(net.forward(p, x), net.forward(p, x));
  const Matrix batch = net.forward(p, x);
  for (int c = 0; c < 5; ++c) EXPECT_EQ(Vector(batch.col(c)), net.forward(p, Vector(x.col(c))));
}

TEST(Gradients, LinearSumClosedForm) {
  Mlp net({3, 2, 1}, Activation::Identity);
  std::mt19937_64 rng(2);
  const auto p = net.init(rng);
  Tape tape;
  const auto leaves = tape.bind(p);
  Vector x(3);
  x << 1.0, -2.0, 0.5;
  const Var loss = sum(net.forward(leaves, tape.constant(x)));
  tape.backward(loss);
  const auto g = tape.gradients(leaves, p);
  // dL/dW2 = hidden^T, dL/dW1 = W2^T x^T
  const Vector h = p[0] * x + p[1];
  EXPECT_LT((g[2] - h.transpose()).norm(), 1e-14);
  EXPECT_LT((g[0] - p[2].transpose() * x.transpose()).norm(), 1e-14);
  EXPECT_LT((g[3] - Matrix::Ones(1, 1)).norm(), 1e-14);
}

TEST(Gradients, NonScalarLossIsAnError) {
  Tape tape;
  const Var v = tape.leaf(Matrix::Ones(2, 1));
  EXPECT_THROW(tape.backward(v), std::invalid_argument);
}

TEST(Gradients, DetachedLossGivesZeros) {
  Mlp net({3, 4, 2});
  std::mt19937_64 rng(2);
  const auto p = net.init(rng);
  Tape tape;
  const auto leaves = tape.bind(p);
  const Var loss = sum(tape.constant(Matrix::Constant(2, 2, 3.0)));
  tape.backward(loss);
  const auto g = tape.gradients(leaves, p);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g[i].norm(), 0.0);
}

TEST(Gradients, AgreeWithCentralDifferences) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    Mlp net({4, 6, 5, 3}, Activation::Tanh, trial % 2 ? Activation::Tanh : Activation::Identity);
    const auto p = net.init(rng);
    const Matrix x = Matrix::Random(4, 3);
    Tape tape;
    const auto leaves = tape.bind(p);
    const Var y = net.forward(leaves, tape.constant(x));
    tape.backward(mean(mul(y, y)));
    const auto analytic = tape.gradients(leaves, p);
    const auto numeric =
        oracle::central_gradient(p, [&](const ParameterSet& q) { return net.forward(q, x).array().square().mean(); });
    EXPECT_LT(oracle::max_relative_error(analytic, numeric, 1e-4), 1e-4);
  }
}

TEST(Gradients, ElementwiseOpsAgreeWithCentralDifferences) {
  ParameterSet p;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix a(3, 4);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = n(rng);
  p.add("a", a);
  auto f_tape = [](const Var& v) {
    const Var s = softplus(v);
    const Var e = exp(scale(v, 0.3));
    const Var c = clamp(v, -0.5, 0.7);
    const Var r = concat_rows(rows(add_scalar(mul(s, e), 1.0), 0, 2), tanh(c));
    const Var z = sub(r, concat_rows(relu(rows(v, 1, 2)), scale(rows(v, 0, 3), 0.5)));
    return mean(col_sum(z));
  };
  auto f_plain = [](const Matrix& v) {
    const Matrix s = (v.array().exp().log1p()).matrix();
    const Matrix e = (0.3 * v.array()).exp().matrix();
    const Matrix c = v.cwiseMax(-0.5).cwiseMin(0.7);
    Matrix r(5, 4), k(5, 4);
    r << (s.cwiseProduct(e).array() + 1.0).matrix().topRows(2), c.array().tanh().matrix();
    k << v.middleRows(1, 2).cwiseMax(0.0), 0.5 * v.topRows(3);
    return (r - k).colwise().sum().mean();
  };
  Tape tape;
  const auto leaves = tape.bind(p);
  tape.backward(f_tape(leaves[0]));
  const auto analytic = tape.gradients(leaves, p);
  const auto numeric = oracle::central_gradient(p, [&](const ParameterSet& q) { return f_plain(q[0]); });
  EXPECT_LT(oracle::max_relative_error(analytic, numeric, 1e-4), 1e-5);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Mlp net({3, 4, 2});
  std::mt19937_64 rng(1);
  auto p = net.init(rng);
  const auto before = p;
  AdamState s(p);
  adam_update(p, p.zeros_like(), s);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i], before[i]);
}

TEST(Adam, FirstStepIsSignedLearningRate) {
  ParameterSet p;
  p.add("x", Matrix::Constant(2, 2, 1.0));
  ParameterSet g = p.zeros_like();
  g.mutable_at(0) << 0.3, -2.0, 5.0, -1e-3;
  AdamState s(p);
  AdamOptions o;
  o.lr = 0.01;
  adam_update(p, g, s, o);
  for (Eigen::Index i = 0; i < 4; ++i) {
    const double gi = g[0].data()[i];
    EXPECT_NEAR(p[0].data()[i] - 1.0, -0.01 * (gi > 0 ? 1.0 : -1.0), 1e-6);
  }
}

TEST(Adam, ShapeMismatchIsAnError) {
  ParameterSet p, g;
  p.add("x", Matrix::Zero(2, 2));
  g.add("x", Matrix::Zero(2, 3));
  AdamState s(p);
  EXPECT_THROW(adam_update(p, g, s), std::invalid_argument);
}

TEST(Adam, ConvexQuadraticDecreasesOverEveryWindow) {
  ParameterSet p;
  p.add("x", (Matrix(3, 1) << 2.0, -1.5, 0.7).finished());
  const Vector scale = (Vector(3) << 1.0, 4.0, 0.5).finished();
  auto loss = [&](const ParameterSet& q) { return 0.5 * (scale.array() * q[0].array().square()).sum(); };
  AdamState s(p);
  AdamOptions o;
  o.lr = 0.01;
  std::vector<double> history{loss(p)};
  for (int k = 0; k < 100; ++k) {
    ParameterSet g = p.zeros_like();
    g.mutable_at(0) = scale.cwiseProduct(Vector(p[0]));
    adam_update(p, g, s, o);
    history.push_back(loss(p));
  }
  for (std::size_t k = 10; k < history.size(); ++k) EXPECT_LT(history[k], history[k - 10]);
}

TEST(ParameterSet, RejectsDuplicatesAndNonFinite) {
  ParameterSet p;
  p.add("a", Matrix::Zero(1, 1));
  EXPECT_THROW(p.add("a", Matrix::Zero(1, 1)), std::invalid_argument);
  EXPECT_THROW(p.add("b", Matrix::Constant(1, 1, std::nan(""))), std::invalid_argument);
}

TEST(ParameterSet, SoftUpdateWithTauOneCopies) {
  Mlp net({3, 4, 2});
  std::mt19937_64 rng(1);
  auto target = net.init(rng);
  const auto online = net.init(rng);
  target.soft_update(online, 1.0);
  for (std::size_t i = 0; i < target.size(); ++i) EXPECT_EQ(target[i], online[i]);
}

TEST(Checkpoint, RoundTripIsExact) {
  Mlp net({3, 5, 2});
  std::mt19937_64 rng(10);
  const auto p = net.init(rng);
  const auto path = std::filesystem::temp_directory_path() / "sdrl_nn_roundtrip.ckpt";
  save_checkpoint(path, p, {{"note", "x"}});
  const auto ck = load_checkpoint(path);
  ASSERT_EQ(ck.params.size(), p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_EQ(ck.params.name(i), p.name(i));
    EXPECT_EQ(ck.params[i], p[i]);
  }
  EXPECT_EQ(ck.hyperparameters["note"], "x");
  std::filesystem::remove(path);
  std::filesystem::remove(sidecar_path(path));
}

TEST(Checkpoint, CorruptFilesAreRejected) {
  const auto path = std::filesystem::temp_directory_path() / "sdrl_nn_bad.ckpt";
  { std::ofstream(path) << "not a checkpoint"; }
  EXPECT_THROW(load_checkpoint(path), CheckpointError);
  EXPECT_THROW(load_checkpoint(path.string() + ".missing"), CheckpointError);
  std::filesystem::remove(path);
}

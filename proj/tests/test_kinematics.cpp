#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles/dh_chain.hpp"
#include "sdrl/kinematics.hpp"

using namespace sdrl::kinematics;

namespace {

JointVector random_q(std::mt19937_64& rng, double span = std::numbers::pi) {
  std::uniform_real_distribution<double> u(-span, span);
  JointVector q;
  for (int i = 0; i < kNumJoints; ++i) q[i] = u(rng);
  return q;
}

std::array<double, 6> as_array(const JointVector& q) {
  std::array<double, 6> a{};
  for (int i = 0; i < 6; ++i) a[i] = q[i];
  return a;
}

}  // namespace

TEST(ArmModel, RejectsBadLimitsAndSpeed) {
  const auto ur5 = ArmModel::ur5();
  auto limits = ur5.limits();
  limits[2] = {1.0, 1.0};
  EXPECT_THROW(ArmModel(ur5.links(), limits, 2.97), std::invalid_argument);
  EXPECT_THROW(ArmModel(ur5.links(), ur5.limits(), 0.0), std::invalid_argument);
  EXPECT_DOUBLE_EQ(ur5.max_joint_speed(), 2.97);
}

TEST(ForwardKinematics, DegenerateChainSitsAtOrigin) {
  std::array<DhLink, kNumJoints> links{};
  for (auto& l : links) l.alpha = 0.7;
  const ArmModel zero(links, ArmModel::ur5().limits(), 1.0);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 10; ++k) {
    EXPECT_LT(forward_kinematics(zero, random_q(rng)).position.norm(), 1e-15);
  }
}

TEST(ForwardKinematics, ZeroConfigurationMatchesTransformChain) {
  const auto p = forward_kinematics(ArmModel::ur5(), JointVector::Zero()).position;
  const auto o = oracle::chain_position(oracle::ur5_rows(), {});
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(p[i], o[i], 1e-12);
}

TEST(ForwardKinematics, MatchesTransformChainOnRandomConfigurations) {
  const auto arm = ArmModel::ur5();
  std::mt19937_64 rng(11);
  for (int k = 0; k < 100; ++k) {
    const auto q = random_q(rng, 2.0 * std::numbers::pi);
    const auto p = forward_kinematics(arm, q).position;
    const auto o = oracle::chain_position(oracle::ur5_rows(), as_array(q));
    EXPECT_LT((p - Eigen::Vector3d(o[0], o[1], o[2])).norm(), 1e-9);
  }
}

TEST(ForwardKinematics, PeriodicInEachJoint) {
  const auto arm = ArmModel::ur5();
  std::mt19937_64 rng(5);
  const auto q = random_q(rng);
  for (int j = 0; j < kNumJoints; ++j) {
    JointVector q2 = q;
    q2[j] += 2.0 * std::numbers::pi;
    EXPECT_LT((forward_kinematics(arm, q).position - forward_kinematics(arm, q2).position).norm(), 1e-12);
  }
}

TEST(ForwardKinematics, QuaternionIsUnit) {
  const auto arm = ArmModel::ur5();
  std::mt19937_64 rng(8);
  for (int k = 0; k < 50; ++k) {
    EXPECT_NEAR(forward_kinematics(arm, random_q(rng)).orientation.norm(), 1.0, 1e-9);
  }
}

TEST(ForwardKinematics, HomePoseFacesDownAboveTable) {
  JointVector home;
  home << std::numbers::pi, -1.3728, 2.3428, -2.5408, -std::numbers::pi / 2.0, 0.0;
  const auto pose = forward_kinematics(ArmModel::ur5(), home);
  EXPECT_NEAR(pose.position.x(), 0.40, 2e-3);
  EXPECT_NEAR(pose.position.z(), 0.10, 2e-3);
  const Eigen::Vector3d tool_z = pose.orientation * Eigen::Vector3d::UnitZ();
  EXPECT_LT(tool_z.z(), -0.999);
}

TEST(PositionJacobian, MatchesFiniteDifferences) {
  const auto arm = ArmModel::ur5();
  std::mt19937_64 rng(21);
  for (int k = 0; k < 20; ++k) {
    const auto q = random_q(rng);
    const auto J = position_jacobian(arm, q);
    for (int j = 0; j < kNumJoints; ++j) {
      JointVector up = q, down = q;
      up[j] += 1e-6;
      down[j] -= 1e-6;
      const Eigen::Vector3d fd =
          (forward_kinematics(arm, up).position - forward_kinematics(arm, down).position) / 2e-6;
      EXPECT_LT((J.col(j) - fd).norm(), 1e-7);
    }
  }
}

TEST(InverseKinematics, FixedPointRoundTrip) {
  const auto arm = ArmModel::ur5();
  std::mt19937_64 rng(2);
  const auto q = random_q(rng);
  const auto r = inverse_kinematics(arm, forward_kinematics(arm, q), q);
  ASSERT_EQ(r.status, IkStatus::Converged);
  EXPECT_LT(r.residual, 1e-9);
  EXPECT_EQ(*r.solution, q);
}

TEST(InverseKinematics, BeyondReachIsUnreachable) {
  const auto arm = ArmModel::ur5();
  Pose far;
  far.position = Eigen::Vector3d(arm.reach_bound() + 0.01, 0.0, 0.0);
  const auto r = inverse_kinematics(arm, far, JointVector::Zero());
  EXPECT_EQ(r.status, IkStatus::Unreachable);
  EXPECT_FALSE(r.solution.has_value());
  EXPECT_GT(r.residual, 0.0);
}

TEST(InverseKinematics, SeedOutsideLimitsIsAnError) {
  const auto arm = ArmModel::ur5();
  JointVector seed = JointVector::Zero();
  seed[0] = 7.0;
  EXPECT_THROW(inverse_kinematics(arm, Pose{}, seed), std::invalid_argument);
}

TEST(InverseKinematics, RandomReachableTargetsConverge) {
  const auto arm = ArmModel::ur5();
  std::mt19937_64 rng(42);
  int converged = 0;
  for (int k = 0; k < 300; ++k) {
    const auto q = random_q(rng);
    const JointVector seed = (q + 0.3 * random_q(rng) / std::numbers::pi).cwiseMax(-6.0).cwiseMin(6.0);
    const auto r = inverse_kinematics(arm, forward_kinematics(arm, q), seed);
    if (r.status != IkStatus::Converged) continue;
    ++converged;
    EXPECT_TRUE(arm.within_limits(*r.solution));
    EXPECT_LT((forward_kinematics(arm, *r.solution).position - forward_kinematics(arm, q).position).norm(),
              1e-3);
    EXPECT_LE(r.residual, 1e-4);
  }
  EXPECT_GE(converged, 285);
}

TEST(CheckSpeed, ThresholdExamples) {
  const auto arm = ArmModel::ur5();
  JointVector a = JointVector::Zero(), b = JointVector::Zero();
  b[1] = 0.1;
  auto s = check_speed(a, b, 0.05, arm);
  EXPECT_TRUE(s.ok);
  EXPECT_NEAR(s.max_rate, 2.0, 1e-12);

  s = check_speed(a, a, 0.05, arm);
  EXPECT_TRUE(s.ok);
  EXPECT_EQ(s.max_rate, 0.0);

  b[1] = 0.30;
  s = check_speed(a, b, 0.1, arm);
  EXPECT_FALSE(s.ok);
  EXPECT_NEAR(s.max_rate, 3.0, 1e-12);
}

TEST(CheckSpeed, RejectsNonPositiveDt) {
  const auto arm = ArmModel::ur5();
  EXPECT_THROW(check_speed(JointVector::Zero(), JointVector::Zero(), 0.0, arm), std::invalid_argument);
  EXPECT_THROW(check_speed(JointVector::Zero(), JointVector::Zero(), -1.0, arm), std::invalid_argument);
}

TEST(CheckSpeed, SymmetricAndScaleCovariant) {
  const auto arm = ArmModel::ur5();
  std::mt19937_64 rng(9);
  for (int k = 0; k < 200; ++k) {
    const auto a = random_q(rng, 0.2), b = random_q(rng, 0.2);
    const auto ab = check_speed(a, b, 0.1, arm), ba = check_speed(b, a, 0.1, arm);
    EXPECT_EQ(ab.max_rate, ba.max_rate);
    EXPECT_EQ(ab.ok, ba.ok);
    EXPECT_EQ(check_speed(a, b, 0.05, arm).max_rate, 2.0 * ab.max_rate);
  }
}

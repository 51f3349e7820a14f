#include "sdrl/kinematics.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sdrl::kinematics {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Largest joint step a single DLS iteration may take; keeps iterations from random seeds stable.
constexpr double kMaxIterationStep = 0.5;

Eigen::Isometry3d dh_transform(const DhLink& link, double theta) {
  const double ct = std::cos(theta + link.theta_offset);
  const double st = std::sin(theta + link.theta_offset);
  const double ca = std::cos(link.alpha);
  const double sa = std::sin(link.alpha);
  Eigen::Matrix4d m;
  m << ct, -st * ca, st * sa, link.a * ct,
       st, ct * ca, -ct * sa, link.a * st,
       0.0, sa, ca, link.d,
       0.0, 0.0, 0.0, 1.0;
  return Eigen::Isometry3d(m);
}

// Moves out-of-range angles by whole turns where that lands them inside the limits,
// otherwise clamps. Returns true if any joint had to be clamped.
bool project_into_limits(const ArmModel& model, JointVector& q) {
  bool clamped = false;
  for (int i = 0; i < kNumJoints; ++i) {
    const auto [lo, hi] = model.limits()[i];
    double v = q[i];
    while (v > hi && v - kTwoPi >= lo) v -= kTwoPi;
    while (v < lo && v + kTwoPi <= hi) v += kTwoPi;
    if (v < lo) {
      v = lo;
      clamped = true;
    } else if (v > hi) {
      v = hi;
      clamped = true;
    }
    q[i] = v;
  }
  return clamped;
}

}  // namespace

ArmModel::ArmModel(const std::array<DhLink, kNumJoints>& links,
                   const std::array<JointLimit, kNumJoints>& limits, double max_joint_speed)
    : links_(links), limits_(limits), max_joint_speed_(max_joint_speed) {
  for (int i = 0; i < kNumJoints; ++i) {
    const auto& l = links_[i];
    if (!std::isfinite(l.a) || !std::isfinite(l.d) || !std::isfinite(l.alpha) ||
        !std::isfinite(l.theta_offset)) {
      throw std::invalid_argument("ArmModel: non-finite DH parameter on joint " + std::to_string(i));
    }
    if (!(limits_[i].min < limits_[i].max)) {
      throw std::invalid_argument("ArmModel: joint " + std::to_string(i) + " has min >= max");
    }
  }
  if (!(max_joint_speed_ > 0.0) || !std::isfinite(max_joint_speed_)) {
    throw std::invalid_argument("ArmModel: max_joint_speed must be positive");
  }
}

ArmModel ArmModel::ur5() {
  constexpr double half_pi = std::numbers::pi / 2.0;
  const std::array<DhLink, kNumJoints> links{{
      {0.0, 0.089159, half_pi, 0.0},
      {-0.425, 0.0, 0.0, 0.0},
      {-0.39225, 0.0, 0.0, 0.0},
      {0.0, 0.10915, half_pi, 0.0},
      {0.0, 0.09465, -half_pi, 0.0},
      {0.0, 0.0823, 0.0, 0.0},
  }};
  std::array<JointLimit, kNumJoints> limits;
  limits.fill({-kTwoPi, kTwoPi});
  return ArmModel(links, limits, 2.97);
}

bool ArmModel::within_limits(const JointVector& q) const {
  for (int i = 0; i < kNumJoints; ++i) {
    if (!(q[i] >= limits_[i].min && q[i] <= limits_[i].max)) return false;
  }
  return true;
}

double ArmModel::reach_bound() const {
  double sum = 0.0;
  for (const auto& l : links_) sum += std::abs(l.a) + std::abs(l.d);
  return sum;
}

Pose forward_kinematics(const ArmModel& model, const JointVector& q) {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  for (int i = 0; i < kNumJoints; ++i) t = t * dh_transform(model.links()[i], q[i]);
  Pose pose;
  pose.position = t.translation();
  Eigen::Quaterniond rot(t.rotation());
  rot.normalize();
  if (rot.w() < 0.0) rot.coeffs() = -rot.coeffs();
  pose.orientation = rot;
  return pose;
}

PositionJacobian position_jacobian(const ArmModel& model, const JointVector& q) {
  std::array<Eigen::Vector3d, kNumJoints> origins;
  std::array<Eigen::Vector3d, kNumJoints> axes;
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  for (int i = 0; i < kNumJoints; ++i) {
    // joint i rotates about the z axis of frame i-1
    origins[i] = t.translation();
    axes[i] = t.linear().col(2);
    t = t * dh_transform(model.links()[i], q[i]);
  }
  const Eigen::Vector3d tip = t.translation();
  PositionJacobian jac;
  for (int i = 0; i < kNumJoints; ++i) jac.col(i) = axes[i].cross(tip - origins[i]);
  return jac;
}

IkResult inverse_kinematics(const ArmModel& model, const Pose& target, const JointVector& seed,
                            const IkOptions& options) {
  if (!seed.allFinite() || !model.within_limits(seed)) {
    throw std::invalid_argument("inverse_kinematics: seed outside joint limits");
  }
  IkResult result;
  const Eigen::Vector3d goal = target.position;
  if (!goal.allFinite() || goal.norm() > model.reach_bound()) {
    result.status = IkStatus::Unreachable;
    result.residual = goal.allFinite() ? (goal - forward_kinematics(model, seed).position).norm()
                                       : std::numeric_limits<double>::infinity();
    return result;
  }

  const double lambda_sq = options.damping * options.damping;
  JointVector q = seed;
  JointVector best_q = seed;
  double best = std::numeric_limits<double>::infinity();
  bool clamped = false;

  for (int iter = 0; iter <= options.max_iterations; ++iter) {
    const Eigen::Vector3d err = goal - forward_kinematics(model, q).position;
    const double r = err.norm();
    if (r < best) {
      best = r;
      best_q = q;
    }
    if (r <= options.tolerance) break;
    if (iter == options.max_iterations) break;

    const PositionJacobian jac = position_jacobian(model, q);
    const Eigen::Matrix3d jjt = jac * jac.transpose() + lambda_sq * Eigen::Matrix3d::Identity();
    JointVector dq = jac.transpose() * jjt.ldlt().solve(err);
    const double step = dq.cwiseAbs().maxCoeff();
    if (step > kMaxIterationStep) dq *= kMaxIterationStep / step;
    q += dq;
    clamped = project_into_limits(model, q);
  }

  result.residual = best;
  if (best <= options.tolerance && model.within_limits(best_q)) {
    result.status = IkStatus::Converged;
    result.solution = best_q;
  } else {
    result.status = clamped ? IkStatus::LimitViolation : IkStatus::Unreachable;
  }
  return result;
}

SpeedCheck check_speed(const JointVector& prev, const JointVector& next, double dt,
                       const ArmModel& model) {
  if (!(dt > 0.0)) throw std::invalid_argument("check_speed: dt must be positive");
  SpeedCheck out;
  out.max_rate = (next - prev).cwiseAbs().maxCoeff() / dt;
  out.ok = out.max_rate <= model.max_joint_speed();
  return out;
}

}  // namespace sdrl::kinematics

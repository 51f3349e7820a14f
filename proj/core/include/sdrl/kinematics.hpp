#pragma once

#include <array>
#include <optional>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace sdrl::kinematics {

inline constexpr int kNumJoints = 6;

using JointVector = Eigen::Matrix<double, kNumJoints, 1>;
using PositionJacobian = Eigen::Matrix<double, 3, kNumJoints>;

/// Standard Denavit-Hartenberg link: Rz(theta + theta_offset) Tz(d) Tx(a) Rx(alpha).
struct DhLink {
  double a = 0.0;
  double d = 0.0;
  double alpha = 0.0;
  double theta_offset = 0.0;
};

struct JointLimit {
  double min = 0.0;
  double max = 0.0;
};

/// Serial 6-joint arm. Construction validates limits and the joint speed cap.
class ArmModel {
 public:
  ArmModel(const std::array<DhLink, kNumJoints>& links,
           const std::array<JointLimit, kNumJoints>& limits,
           double max_joint_speed);

  /// Published UR5 geometry, continuous joints bounded to +-2*pi, 2.97 rad/s cap.
  static ArmModel ur5();

  const std::array<DhLink, kNumJoints>& links() const { return links_; }
  const std::array<JointLimit, kNumJoints>& limits() const { return limits_; }
  double max_joint_speed() const { return max_joint_speed_; }

  bool within_limits(const JointVector& q) const;

  /// Upper bound on the distance from the base origin to the tool point.
  double reach_bound() const;

 private:
  std::array<DhLink, kNumJoints> links_;
  std::array<JointLimit, kNumJoints> limits_;
  double max_joint_speed_;
};

struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
};

Pose forward_kinematics(const ArmModel& model, const JointVector& q);

/// Position rows of the geometric Jacobian at q.
PositionJacobian position_jacobian(const ArmModel& model, const JointVector& q);

enum class IkStatus { Converged, Unreachable, LimitViolation };

struct IkOptions {
  double damping = 0.05;
  int max_iterations = 200;
  double tolerance = 1e-4;  // m
};

struct IkResult {
  IkStatus status = IkStatus::Unreachable;
  std::optional<JointVector> solution;  // present iff Converged
  double residual = 0.0;                // best position error found, m
};

/// Position-only damped least squares from `seed`. Orientation of `target` is ignored.
IkResult inverse_kinematics(const ArmModel& model, const Pose& target, const JointVector& seed,
                            const IkOptions& options = {});

struct SpeedCheck {
  bool ok = true;
  double max_rate = 0.0;  // rad/s
};

/// Largest per-joint rate between two configurations. Throws std::invalid_argument if dt <= 0.
SpeedCheck check_speed(const JointVector& prev, const JointVector& next, double dt,
                       const ArmModel& model);

}  // namespace sdrl::kinematics

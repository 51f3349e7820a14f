#pragma once

#include <Eigen/Core>

#include "sdrl/world.hpp"

namespace sdrl::env {

struct GraspParams {
  double grasp_radius = 0.01;  // m, max eef-to-cube-center distance for a secure grasp
  double lift_height = 0.05;   // m above the resting height
};

struct GraspState {
  bool closed = false;
  bool holding = false;
  Eigen::Vector3d hold_offset = Eigen::Vector3d::Zero();  // cube center - eef at grasp time
};

struct GraspOutcome {
  bool grasp_success = false;         // holding the cube after this step
  bool newly_secured = false;         // closed on the cube during this step
  bool grasp_attempt_failed = false;  // closed away from the cube during this step
  bool lifted = false;                // held cube raised at least lift_height
  GraspState state;
  world::Box cube;  // cube after following the gripper or being released
};

/// One gripper update. A close command on an open gripper is a grasp attempt; it succeeds if the
/// eef is within grasp_radius of the cube center. A held cube follows the eef; opening drops it
/// back to `rest_z`.
GraspOutcome check_grasp(const GraspState& prev, const Eigen::Vector3d& eef_position,
                         double gripper_command, const world::Box& cube, double rest_z,
                         const GraspParams& params = {});

}  // namespace sdrl::env

#include "sdrl/grasp.hpp"

namespace sdrl::env {

GraspOutcome check_grasp(const GraspState& prev, const Eigen::Vector3d& eef_position,
                         double gripper_command, const world::Box& cube, double rest_z,
                         const GraspParams& params) {
  GraspOutcome out;
  out.state = prev;
  out.cube = cube;
  const bool close = gripper_command >= 0.0;

  if (close && !prev.closed) {
    out.state.closed = true;
    if ((cube.center - eef_position).norm() <= params.grasp_radius) {
      out.state.holding = true;
      out.state.hold_offset = cube.center - eef_position;
      out.newly_secured = true;
    } else {
      out.grasp_attempt_failed = true;
    }
  } else if (!close && prev.closed) {
    out.state.closed = false;
    if (prev.holding) {
      out.state.holding = false;
      out.state.hold_offset.setZero();
      out.cube.center.z() = rest_z;
    }
  }

  if (out.state.holding) {
    out.cube.center = eef_position + out.state.hold_offset;
    out.lifted = out.cube.center.z() - rest_z >= params.lift_height;
  }
  out.grasp_success = out.state.holding;
  return out;
}

}  // namespace sdrl::env

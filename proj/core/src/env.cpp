#include "sdrl/env.hpp"

#include <algorithm>
#include <numbers>
#include <random>
#include <stdexcept>

namespace sdrl::env {

using kinematics::IkStatus;

Action Action::from_span(std::span<const double> values) {
  if (values.size() != kActionDim) throw std::invalid_argument("Action: expected 4 values");
  Action a;
  a.delta_position = Eigen::Vector3d(values[0], values[1], values[2]);
  a.gripper = values[3];
  return a;
}

std::array<double, kActionDim> Action::to_array() const {
  return {delta_position.x(), delta_position.y(), delta_position.z(), gripper};
}

Action Action::clamped() const {
  Action a;
  a.delta_position = delta_position.cwiseMax(-1.0).cwiseMin(1.0);
  a.gripper = std::clamp(gripper, -1.0, 1.0);
  return a;
}

std::array<double, kObservationDim> Observation::to_array() const {
  std::array<double, kObservationDim> out{};
  auto put = [&out](int at, const Eigen::Vector3d& v) {
    out[at] = v.x();
    out[at + 1] = v.y();
    out[at + 2] = v.z();
  };
  put(0, eef_position);
  put(3, eef_velocity);
  out[6] = gripper_aperture;
  put(7, cube_position);
  put(10, cube_relative);
  put(13, obstacle_position);
  out[16] = grasped ? 1.0 : 0.0;
  return out;
}

Observation Observation::from_span(std::span<const double> v) {
  if (v.size() != kObservationDim) throw std::invalid_argument("Observation: expected 17 values");
  Observation o;
  o.eef_position = {v[0], v[1], v[2]};
  o.eef_velocity = {v[3], v[4], v[5]};
  o.gripper_aperture = v[6];
  o.cube_position = {v[7], v[8], v[9]};
  o.cube_relative = {v[10], v[11], v[12]};
  o.obstacle_position = {v[13], v[14], v[15]};
  o.grasped = v[16] >= 0.5;
  return o;
}

std::string_view to_string(Scenario s) {
  return s == Scenario::Normal ? "normal" : "obstacle";
}

std::string_view to_string(RewardMode m) { return m == RewardMode::Drl ? "drl" : "sd-drl"; }

void RewardConfig::validate() const {
  for (double c : {speed_cost, coll_cost, cube_coll_cost, obstacle_coll_cost, coll_vel_cost,
                   gripper_cost, ik_cost}) {
    if (!(c <= 0.0)) throw std::invalid_argument("RewardConfig: costs must be <= 0");
  }
  if (!(grip_rew >= 0.0) || !(grip_prop_rew >= 0.0)) {
    throw std::invalid_argument("RewardConfig: rewards must be >= 0");
  }
  if (!(collision_velocity_threshold > 0.0) || !(force_failure_threshold > 0.0)) {
    throw std::invalid_argument("RewardConfig: thresholds must be > 0");
  }
}

double compute_reward(const TransitionEvents& e, const RewardConfig& c) {
  double r = -e.distance_d;
  if (e.grasp_secured) r += c.grip_rew;
  if (e.grasp_success) r += c.grip_prop_rew;
  if (e.grasp_attempt_failed) r += c.gripper_cost;
  if (c.mode == RewardMode::Drl) return r;

  if (e.speed_violation) r += c.speed_cost;
  if (e.collision_env) r += c.coll_cost;
  if (e.collision_cube) r += c.cube_coll_cost;
  if (e.collision_velocity_exceeded) r += c.coll_vel_cost;
  if (e.collision_obstacle) r += c.obstacle_coll_cost;
  if (e.ik_failure) r += c.ik_cost;
  return r;
}

kinematics::JointVector EnvConfig::default_home() {
  kinematics::JointVector q;
  // tool pointing down at (0.40, 0.109, 0.10)
  q << std::numbers::pi, -1.3728, 2.3428, -2.5408, -std::numbers::pi / 2.0, 0.0;
  return q;
}

GraspEnv::GraspEnv(EnvConfig config) : config_(std::move(config)) {
  config_.reward.validate();
  if (!config_.arm.within_limits(config_.home)) {
    throw std::invalid_argument("EnvConfig: home configuration outside joint limits");
  }
  if (!(config_.dt > 0.0) || !(config_.action_scale > 0.0) || config_.max_steps < 1 ||
      !(config_.eef_radius > 0.0) || !(config_.stiffness > 0.0)) {
    throw std::invalid_argument("EnvConfig: dt, action_scale, radius, stiffness and step budget "
                                "must be positive");
  }
  if ((config_.obstacle_half_extents.array() <= 0.0).any()) {
    throw std::invalid_argument("EnvConfig: obstacle extents must be positive");
  }
  if ((config_.cube_region_min.array() > config_.cube_region_max.array()).any()) {
    throw std::invalid_argument("EnvConfig: empty cube region");
  }
}

Observation GraspEnv::reset(std::uint64_t seed, Scenario scenario,
                            const world::DisturbanceSpec& disturbance) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto lerp = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  world::Scene scene = config_.scene;
  scene.cube.center.x() = lerp(config_.cube_region_min.x(), config_.cube_region_max.x());
  scene.cube.center.y() = lerp(config_.cube_region_min.y(), config_.cube_region_max.y());
  scene.cube.center.z() = scene.table_height + scene.cube.half_extents.z();
  scene.obstacle.reset();
  if (scenario == Scenario::StaticObstacle) {
    world::Box bar;
    bar.half_extents = config_.obstacle_half_extents;
    bar.center.x() = lerp(config_.obstacle_x_range.x(), config_.obstacle_x_range.y());
    bar.center.y() = scene.cube.center.y() + lerp(-config_.obstacle_y_jitter, config_.obstacle_y_jitter);
    bar.center.z() = scene.table_height + bar.half_extents.z();
    scene.obstacle = bar;
  }
  scene_ = world::apply_disturbance(scene, disturbance);

  q_ = config_.home;
  eef_ = kinematics::forward_kinematics(config_.arm, q_).position;
  eef_velocity_.setZero();
  grasp_ = {};
  cube_rest_z_ = scene_.cube.center.z();
  steps_ = 0;
  started_ = true;
  done_ = false;
  return observation();
}

Observation GraspEnv::observation() const {
  Observation o;
  o.eef_position = eef_;
  o.eef_velocity = eef_velocity_;
  o.gripper_aperture = grasp_.closed ? 0.0 : 1.0;
  o.cube_position = scene_.cube.center;
  o.cube_relative = scene_.cube.center - eef_;
  if (scene_.obstacle) o.obstacle_position = scene_.obstacle->center;
  o.grasped = grasp_.holding;
  return o;
}

StepResult GraspEnv::step(const Action& raw) {
  if (!started_) throw std::logic_error("GraspEnv::step called before reset");
  if (done_) throw std::logic_error("GraspEnv::step called after the episode ended");

  const Action action = raw.clamped();
  const RewardConfig& rc = config_.reward;
  TransitionEvents ev;

  // Shield: commands without an IK solution or above the joint speed cap are ignored.
  const Eigen::Vector3d prev_eef = eef_;
  kinematics::Pose target;
  target.position = eef_ + config_.action_scale * action.delta_position;
  const auto ik = kinematics::inverse_kinematics(config_.arm, target, q_, config_.ik);
  bool moved = false;
  if (ik.status != IkStatus::Converged) {
    ev.ik_failure = true;
  } else if (!kinematics::check_speed(q_, *ik.solution, config_.dt, config_.arm).ok) {
    ev.speed_violation = true;
  } else {
    q_ = *ik.solution;
    eef_ = kinematics::forward_kinematics(config_.arm, q_).position;
    moved = true;
  }
  eef_velocity_ = moved ? Eigen::Vector3d((eef_ - prev_eef) / config_.dt) : Eigen::Vector3d::Zero();

  const world::CollisionOptions copts{config_.stiffness, !grasp_.holding};
  const auto contacts =
      world::detect_collisions(scene_, eef_, config_.eef_radius, eef_velocity_, copts);
  for (const auto& c : contacts) {
    switch (c.body) {
      case world::Body::Table:
      case world::Body::WorkspaceBound: ev.collision_env = true; break;
      case world::Body::Cube: ev.collision_cube = true; break;
      case world::Body::Obstacle: ev.collision_obstacle = true; break;
    }
    ev.collision_force = std::max(ev.collision_force, c.force);
    ev.collision_impact_speed = std::max(ev.collision_impact_speed, c.impact_speed);
    if (c.impact_speed > rc.collision_velocity_threshold) ev.collision_velocity_exceeded = true;
  }
  ev.velocity_violation =
      eef_velocity_.norm() > rc.collision_velocity_threshold &&
      world::clearance(scene_, eef_, config_.eef_radius, !grasp_.holding) <= config_.proximity_radius;

  const auto grasp =
      check_grasp(grasp_, eef_, action.gripper, scene_.cube, cube_rest_z_, config_.grasp);
  grasp_ = grasp.state;
  scene_.cube = grasp.cube;
  ev.grasp_secured = grasp.newly_secured;
  ev.grasp_attempt_failed = grasp.grasp_attempt_failed;
  ev.grasp_success = grasp.lifted;
  ev.distance_d = (scene_.cube.center - eef_).norm();

  StepResult out;
  out.events = ev;
  out.reward = compute_reward(ev, rc);
  ++steps_;
  out.terminated =
      ev.grasp_success || ev.collision_env || ev.collision_force > rc.force_failure_threshold;
  out.truncated = !out.terminated && steps_ >= config_.max_steps;
  done_ = out.terminated || out.truncated;
  out.observation = observation();
  return out;
}

}  // namespace sdrl::env

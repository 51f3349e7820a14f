#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

#include <Eigen/Core>

#include "sdrl/grasp.hpp"
#include "sdrl/kinematics.hpp"
#include "sdrl/world.hpp"

namespace sdrl::env {

inline constexpr int kActionDim = 4;
inline constexpr int kObservationDim = 17;

/// End-effector command: three displacement components and a gripper command, each in [-1, 1].
struct Action {
  Eigen::Vector3d delta_position = Eigen::Vector3d::Zero();
  double gripper = -1.0;  // >= 0 closes, < 0 opens

  static Action from_span(std::span<const double> values);
  std::array<double, kActionDim> to_array() const;
  Action clamped() const;
};

struct Observation {
  Eigen::Vector3d eef_position = Eigen::Vector3d::Zero();
  Eigen::Vector3d eef_velocity = Eigen::Vector3d::Zero();
  double gripper_aperture = 1.0;  // 1 open, 0 closed
  Eigen::Vector3d cube_position = Eigen::Vector3d::Zero();
  Eigen::Vector3d cube_relative = Eigen::Vector3d::Zero();  // cube - eef
  Eigen::Vector3d obstacle_position = Eigen::Vector3d::Zero();  // zeros when absent
  bool grasped = false;

  /// Flat layout: eef(3) vel(3) aperture(1) cube(3) rel(3) obstacle(3) grasped(1).
  std::array<double, kObservationDim> to_array() const;
  static Observation from_span(std::span<const double> values);
};

enum class Scenario { Normal, StaticObstacle };
enum class RewardMode { Drl, SdDrl };

std::string_view to_string(Scenario s);
std::string_view to_string(RewardMode m);

struct RewardConfig {
  RewardMode mode = RewardMode::SdDrl;
  double speed_cost = -0.5;
  double coll_cost = -5.0;
  double cube_coll_cost = -0.01;
  double obstacle_coll_cost = -0.5;
  double coll_vel_cost = -0.5;
  double gripper_cost = -0.01;
  double grip_rew = 5.0;
  double grip_prop_rew = 10.0;
  double ik_cost = -0.5;
  double collision_velocity_threshold = 0.25;  // m/s
  double force_failure_threshold = 100.0;      // N

  /// Throws std::invalid_argument if a cost is positive, a reward negative or a threshold <= 0.
  void validate() const;
};

struct TransitionEvents {
  double distance_d = 0.0;
  bool grasp_secured = false;  // gripper closed on the cube this step
  bool grasp_success = false;  // held cube lifted; episode success
  bool grasp_attempt_failed = false;
  bool speed_violation = false;
  bool ik_failure = false;
  bool collision_env = false;
  bool collision_cube = false;
  bool collision_obstacle = false;
  bool collision_velocity_exceeded = false;
  bool velocity_violation = false;
  double collision_force = 0.0;
  double collision_impact_speed = 0.0;

  bool any_collision() const { return collision_env || collision_cube || collision_obstacle; }
  bool operator==(const TransitionEvents&) const = default;
};

/// Reward for one transition. DRL mode: -d + g + g_c. SD-DRL adds every safety cost whose flag is
/// set. Costs are stored negative and added.
double compute_reward(const TransitionEvents& events, const RewardConfig& config);

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
  TransitionEvents events;
};

struct EnvConfig {
  kinematics::ArmModel arm = kinematics::ArmModel::ur5();
  kinematics::JointVector home = default_home();
  kinematics::IkOptions ik;
  world::Scene scene = world::default_scene();
  // Cube centers are drawn uniformly over this xy rectangle.
  Eigen::Vector2d cube_region_min{0.50, -0.05};
  Eigen::Vector2d cube_region_max{0.62, 0.25};
  // Obstacle x is drawn from this range; its y is the cube's plus a uniform jitter.
  Eigen::Vector2d obstacle_x_range{0.42, 0.44};
  double obstacle_y_jitter = 0.05;
  Eigen::Vector3d obstacle_half_extents = world::default_obstacle_half_extents();
  double eef_radius = world::kDefaultEffectorRadius;
  double stiffness = world::kDefaultStiffness;
  double action_scale = 0.02;  // m per unit action per step
  double dt = 0.05;            // s
  int max_steps = 200;
  GraspParams grasp;
  double proximity_radius = 0.10;  // m, band for the near-body velocity check
  RewardConfig reward;

  static kinematics::JointVector default_home();
};

/// Gym-style grasp task. Single-threaded; one instance per thread.
class GraspEnv {
 public:
  explicit GraspEnv(EnvConfig config = {});

  Observation reset(std::uint64_t seed, Scenario scenario = Scenario::Normal,
                    const world::DisturbanceSpec& disturbance = {});

  /// Throws std::logic_error before reset or after the episode ended.
  StepResult step(const Action& action);

  const EnvConfig& config() const { return config_; }
  const world::Scene& scene() const { return scene_; }
  const kinematics::JointVector& joints() const { return q_; }
  const Eigen::Vector3d& eef_position() const { return eef_; }
  int steps() const { return steps_; }
  bool done() const { return done_; }
  Observation observation() const;

 private:
  EnvConfig config_;
  world::Scene scene_;
  kinematics::JointVector q_;
  Eigen::Vector3d eef_ = Eigen::Vector3d::Zero();
  Eigen::Vector3d eef_velocity_ = Eigen::Vector3d::Zero();
  GraspState grasp_;
  double cube_rest_z_ = 0.0;
  int steps_ = 0;
  bool started_ = false;
  bool done_ = false;
};

}  // namespace sdrl::env

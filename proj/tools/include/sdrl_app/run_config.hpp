#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdrl/env.hpp"
#include "sdrl/tqc.hpp"

namespace sdrl::app {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Everything a run needs. Loaded from an INI file, then overridden by flags.
///
/// Sections and keys:
///   [run]    seed, scenario (normal|obstacle), out, steps, eval_every, eval_episodes,
///            checkpoint_every, workers
///   [reward] mode (drl|sd-drl), speed_cost, coll_cost, cube_coll_cost, obstacle_coll_cost,
///            coll_vel_cost, gripper_cost, grip_rew, grip_prop_rew, ik_cost,
///            collision_velocity_threshold, force_failure_threshold
///   [tqc]    n_critics, quantiles_per_critic, dropped_per_critic, gamma, tau, actor_lr,
///            critic_lr, alpha_lr, batch_size, target_entropy, replay_capacity, warmup_steps,
///            hidden, train_freq, gradient_steps, initial_alpha
///   [scene]  table_height, workspace_min, workspace_max, cube_half_extents, cube_region_min,
///            cube_region_max, obstacle_half_extents, obstacle_x_range, obstacle_y_jitter,
///            eef_radius, stiffness, action_scale, dt, max_steps, grasp_radius, lift_height,
///            proximity_radius
///   [arm]    max_joint_speed, home, ik_damping, ik_max_iterations, ik_tolerance, and per joint
///            i = 1..6: joint<i>_a, joint<i>_d, joint<i>_alpha, joint<i>_theta_offset,
///            joint<i>_min, joint<i>_max
/// Vectors are comma separated. Lengths in m, angles in rad, speeds in m/s or rad/s.
struct RunConfig {
  env::EnvConfig env;
  tqc::TqcConfig tqc;
  env::Scenario scenario = env::Scenario::Normal;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "runs";
  long train_steps = 5000;
  int eval_every = 25;
  int eval_episodes = 10;
  long checkpoint_every = 0;
  int workers = 1;

  /// Throws ConfigError if any component is invalid.
  void validate() const;
};

/// Throws ConfigError on syntax errors, unknown sections or keys, bad values.
RunConfig parse_run_config(const std::string& text);
/// As parse_run_config; throws std::runtime_error if the file cannot be read.
RunConfig load_run_config(const std::filesystem::path& path);

/// INI text that parses back to `config`.
std::string format_run_config(const RunConfig& config);

nlohmann::json to_json(const RunConfig& config);

env::Scenario parse_scenario(const std::string& text);
env::RewardMode parse_reward_mode(const std::string& text);

}  // namespace sdrl::app

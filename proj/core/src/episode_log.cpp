#include "sdrl/episode_log.hpp"

namespace sdrl::env {

using nlohmann::json;

namespace {

json vec3(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

json to_json(const TransitionEvents& e) {
  return json{{"distance_d", e.distance_d},
              {"grasp_secured", e.grasp_secured},
              {"grasp_success", e.grasp_success},
              {"grasp_attempt_failed", e.grasp_attempt_failed},
              {"speed_violation", e.speed_violation},
              {"ik_failure", e.ik_failure},
              {"collision_env", e.collision_env},
              {"collision_cube", e.collision_cube},
              {"collision_obstacle", e.collision_obstacle},
              {"collision_velocity_exceeded", e.collision_velocity_exceeded},
              {"velocity_violation", e.velocity_violation},
              {"collision_force", e.collision_force},
              {"collision_impact_speed", e.collision_impact_speed}};
}

TransitionEvents events_from_json(const json& j) {
  TransitionEvents e;
  e.distance_d = j.at("distance_d").get<double>();
  e.grasp_secured = j.at("grasp_secured").get<bool>();
  e.grasp_success = j.at("grasp_success").get<bool>();
  e.grasp_attempt_failed = j.at("grasp_attempt_failed").get<bool>();
  e.speed_violation = j.at("speed_violation").get<bool>();
  e.ik_failure = j.at("ik_failure").get<bool>();
  e.collision_env = j.at("collision_env").get<bool>();
  e.collision_cube = j.at("collision_cube").get<bool>();
  e.collision_obstacle = j.at("collision_obstacle").get<bool>();
  e.collision_velocity_exceeded = j.at("collision_velocity_exceeded").get<bool>();
  e.velocity_violation = j.at("velocity_violation").get<bool>();
  e.collision_force = j.at("collision_force").get<double>();
  e.collision_impact_speed = j.at("collision_impact_speed").get<double>();
  return e;
}

json to_json(const StepRecord& r) {
  return json{{"episode", r.episode},
              {"step", r.step},
              {"action", r.action},
              {"reward", r.reward},
              {"terminated", r.terminated},
              {"truncated", r.truncated},
              {"events", to_json(r.events)},
              {"eef", vec3(r.eef)},
              {"cube", vec3(r.cube)}};
}

StepRecord step_record_from_json(const json& j) {
  StepRecord r;
  r.episode = j.at("episode").get<long>();
  r.step = j.at("step").get<int>();
  const auto& a = j.at("action");
  if (!a.is_array() || a.size() != kActionDim) throw std::invalid_argument("action must have 4 values");
  for (int i = 0; i < kActionDim; ++i) r.action[i] = a[i].get<double>();
  r.reward = j.at("reward").get<double>();
  r.terminated = j.at("terminated").get<bool>();
  r.truncated = j.at("truncated").get<bool>();
  r.events = events_from_json(j.at("events"));
  r.eef = vec3_from(j.at("eef"));
  r.cube = vec3_from(j.at("cube"));
  return r;
}

json to_json(const RewardConfig& c) {
  return json{{"mode", std::string(to_string(c.mode))},
              {"speed_cost", c.speed_cost},
              {"coll_cost", c.coll_cost},
              {"cube_coll_cost", c.cube_coll_cost},
              {"obstacle_coll_cost", c.obstacle_coll_cost},
              {"coll_vel_cost", c.coll_vel_cost},
              {"gripper_cost", c.gripper_cost},
              {"grip_rew", c.grip_rew},
              {"grip_prop_rew", c.grip_prop_rew},
              {"ik_cost", c.ik_cost},
              {"collision_velocity_threshold", c.collision_velocity_threshold},
              {"force_failure_threshold", c.force_failure_threshold}};
}

RewardConfig reward_config_from_json(const json& j) {
  RewardConfig c;
  const auto mode = j.at("mode").get<std::string>();
  if (mode == "drl") {
    c.mode = RewardMode::Drl;
  } else if (mode == "sd-drl") {
    c.mode = RewardMode::SdDrl;
  } else {
    throw std::invalid_argument("unknown reward mode '" + mode + "'");
  }
  c.speed_cost = j.at("speed_cost").get<double>();
  c.coll_cost = j.at("coll_cost").get<double>();
  c.cube_coll_cost = j.at("cube_coll_cost").get<double>();
  c.obstacle_coll_cost = j.at("obstacle_coll_cost").get<double>();
  c.coll_vel_cost = j.at("coll_vel_cost").get<double>();
  c.gripper_cost = j.at("gripper_cost").get<double>();
  c.grip_rew = j.at("grip_rew").get<double>();
  c.grip_prop_rew = j.at("grip_prop_rew").get<double>();
  c.ik_cost = j.at("ik_cost").get<double>();
  c.collision_velocity_threshold = j.at("collision_velocity_threshold").get<double>();
  c.force_failure_threshold = j.at("force_failure_threshold").get<double>();
  c.validate();
  return c;
}

EpisodeLogWriter::EpisodeLogWriter(const std::filesystem::path& path)
    : path_(path), out_(path, std::ios::app) {
  if (!out_) throw std::runtime_error("cannot open log file " + path.string());
}

void EpisodeLogWriter::write(const StepRecord& record) {
  out_ << to_json(record).dump() << '\n';
  if (!out_) throw std::runtime_error("write failed on " + path_.string());
}

std::vector<StepRecord> read_episode_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open log file " + path.string());
  std::vector<StepRecord> out;
  std::string line;
  long n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(step_record_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw LogParseError(n, e.what());
    }
  }
  return out;
}

}  // namespace sdrl::env

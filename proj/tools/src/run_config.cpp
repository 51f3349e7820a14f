#include "sdrl_app/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace sdrl::app {
namespace {

using kinematics::kNumJoints;
using nlohmann::json;

// Mutable view used while parsing; the arm model is immutable, so its parts are collected
// here and assembled once every key has been read.
struct Draft {
  RunConfig cfg;
  std::array<kinematics::DhLink, kNumJoints> links;
  std::array<kinematics::JointLimit, kNumJoints> limits;
  double max_joint_speed = 0.0;
};

Draft draft_of(const RunConfig& c) {
  return {c, c.env.arm.links(), c.env.arm.limits(), c.env.arm.max_joint_speed()};
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& raw) {
  const std::string s = trim(raw);
  T value{};
  const char* first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), value);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError("not a valid number: '" + raw + "'");
  }
  return value;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

template <class T>
std::vector<T> parse_list(const std::string& s, std::size_t expected = 0) {
  std::vector<T> out;
  for (const auto& item : split(s)) out.push_back(parse_number<T>(item));
  if (expected && out.size() != expected) {
    throw ConfigError("expected " + std::to_string(expected) + " values, got " +
                      std::to_string(out.size()));
  }
  return out;
}

struct Field {
  std::string section;
  std::string key;
  std::function<void(Draft&, const std::string&)> set;
  std::function<json(const Draft&)> get;
};

template <class T, class Ref>
Field scalar(std::string section, std::string key, Ref ref) {
  return {std::move(section), std::move(key),
          [ref](Draft& d, const std::string& v) { ref(d) = parse_number<T>(v); },
          [ref](const Draft& d) { return json(ref(const_cast<Draft&>(d))); }};
}

template <class V, class Ref>
Field vector(std::string section, std::string key, Ref ref) {
  return {std::move(section), std::move(key),
          [ref](Draft& d, const std::string& v) {
            const auto xs = parse_list<double>(v, V::RowsAtCompileTime);
            for (int i = 0; i < V::RowsAtCompileTime; ++i) ref(d)(i) = xs[i];
          },
          [ref](const Draft& d) {
            const V& x = ref(const_cast<Draft&>(d));
            return json(std::vector<double>(x.data(), x.data() + x.size()));
          }};
}

#define SDRL_REF(expr) [](Draft & d) -> auto& { return expr; }

std::vector<Field> build_fields() {
  std::vector<Field> f;
  // run
  f.push_back(scalar<std::uint64_t>("run", "seed", SDRL_REF(d.cfg.seed)));
  f.push_back({"run", "scenario",
               [](Draft& d, const std::string& v) { d.cfg.scenario = parse_scenario(trim(v)); },
               [](const Draft& d) {
                 return json(d.cfg.scenario == env::Scenario::Normal ? "normal" : "obstacle");
               }});
  f.push_back({"run", "out", [](Draft& d, const std::string& v) { d.cfg.out_dir = trim(v); },
               [](const Draft& d) { return json(d.cfg.out_dir.string()); }});
  f.push_back(scalar<long>("run", "steps", SDRL_REF(d.cfg.train_steps)));
  f.push_back(scalar<int>("run", "eval_every", SDRL_REF(d.cfg.eval_every)));
  f.push_back(scalar<int>("run", "eval_episodes", SDRL_REF(d.cfg.eval_episodes)));
  f.push_back(scalar<long>("run", "checkpoint_every", SDRL_REF(d.cfg.checkpoint_every)));
  f.push_back(scalar<int>("run", "workers", SDRL_REF(d.cfg.workers)));

  // reward
  f.push_back({"reward", "mode",
               [](Draft& d, const std::string& v) { d.cfg.env.reward.mode = parse_reward_mode(trim(v)); },
               [](const Draft& d) {
                 return json(d.cfg.env.reward.mode == env::RewardMode::Drl ? "drl" : "sd-drl");
               }});
  f.push_back(scalar<double>("reward", "speed_cost", SDRL_REF(d.cfg.env.reward.speed_cost)));
  f.push_back(scalar<double>("reward", "coll_cost", SDRL_REF(d.cfg.env.reward.coll_cost)));
  f.push_back(scalar<double>("reward", "cube_coll_cost", SDRL_REF(d.cfg.env.reward.cube_coll_cost)));
  f.push_back(scalar<double>("reward", "obstacle_coll_cost", SDRL_REF(d.cfg.env.reward.obstacle_coll_cost)));
  f.push_back(scalar<double>("reward", "coll_vel_cost", SDRL_REF(d.cfg.env.reward.coll_vel_cost)));
  f.push_back(scalar<double>("reward", "gripper_cost", SDRL_REF(d.cfg.env.reward.gripper_cost)));
  f.push_back(scalar<double>("reward", "grip_rew", SDRL_REF(d.cfg.env.reward.grip_rew)));
  f.push_back(scalar<double>("reward", "grip_prop_rew", SDRL_REF(d.cfg.env.reward.grip_prop_rew)));
  f.push_back(scalar<double>("reward", "ik_cost", SDRL_REF(d.cfg.env.reward.ik_cost)));
  f.push_back(scalar<double>("reward", "collision_velocity_threshold",
                             SDRL_REF(d.cfg.env.reward.collision_velocity_threshold)));
  f.push_back(scalar<double>("reward", "force_failure_threshold",
                             SDRL_REF(d.cfg.env.reward.force_failure_threshold)));

  // tqc
  f.push_back(scalar<int>("tqc", "n_critics", SDRL_REF(d.cfg.tqc.n_critics)));
  f.push_back(scalar<int>("tqc", "quantiles_per_critic", SDRL_REF(d.cfg.tqc.quantiles_per_critic)));
  f.push_back(scalar<int>("tqc", "dropped_per_critic", SDRL_REF(d.cfg.tqc.dropped_per_critic)));
  f.push_back(scalar<double>("tqc", "gamma", SDRL_REF(d.cfg.tqc.gamma)));
  f.push_back(scalar<double>("tqc", "tau", SDRL_REF(d.cfg.tqc.tau)));
  f.push_back(scalar<double>("tqc", "actor_lr", SDRL_REF(d.cfg.tqc.actor_lr)));
  f.push_back(scalar<double>("tqc", "critic_lr", SDRL_REF(d.cfg.tqc.critic_lr)));
  f.push_back(scalar<double>("tqc", "alpha_lr", SDRL_REF(d.cfg.tqc.alpha_lr)));
  f.push_back(scalar<int>("tqc", "batch_size", SDRL_REF(d.cfg.tqc.batch_size)));
  f.push_back({"tqc", "target_entropy",
               [](Draft& d, const std::string& v) {
                 if (trim(v) == "auto") {
                   d.cfg.tqc.target_entropy.reset();
                 } else {
                   d.cfg.tqc.target_entropy = parse_number<double>(v);
                 }
               },
               [](const Draft& d) {
                 return d.cfg.tqc.target_entropy ? json(*d.cfg.tqc.target_entropy) : json("auto");
               }});
  f.push_back(scalar<std::size_t>("tqc", "replay_capacity", SDRL_REF(d.cfg.tqc.replay_capacity)));
  f.push_back(scalar<int>("tqc", "warmup_steps", SDRL_REF(d.cfg.tqc.warmup_steps)));
  f.push_back({"tqc", "hidden",
               [](Draft& d, const std::string& v) { d.cfg.tqc.hidden = parse_list<int>(v); },
               [](const Draft& d) { return json(d.cfg.tqc.hidden); }});
  f.push_back(scalar<int>("tqc", "train_freq", SDRL_REF(d.cfg.tqc.train_freq)));
  f.push_back(scalar<int>("tqc", "gradient_steps", SDRL_REF(d.cfg.tqc.gradient_steps)));
  f.push_back(scalar<double>("tqc", "initial_alpha", SDRL_REF(d.cfg.tqc.initial_alpha)));

  // scene
  f.push_back(scalar<double>("scene", "table_height", SDRL_REF(d.cfg.env.scene.table_height)));
  f.push_back(vector<Eigen::Vector3d>("scene", "workspace_min", SDRL_REF(d.cfg.env.scene.workspace.min)));
  f.push_back(vector<Eigen::Vector3d>("scene", "workspace_max", SDRL_REF(d.cfg.env.scene.workspace.max)));
  f.push_back(vector<Eigen::Vector3d>("scene", "cube_half_extents",
                                      SDRL_REF(d.cfg.env.scene.cube.half_extents)));
  f.push_back(vector<Eigen::Vector2d>("scene", "cube_region_min", SDRL_REF(d.cfg.env.cube_region_min)));
  f.push_back(vector<Eigen::Vector2d>("scene", "cube_region_max", SDRL_REF(d.cfg.env.cube_region_max)));
  f.push_back(vector<Eigen::Vector3d>("scene", "obstacle_half_extents",
                                      SDRL_REF(d.cfg.env.obstacle_half_extents)));
  f.push_back(vector<Eigen::Vector2d>("scene", "obstacle_x_range", SDRL_REF(d.cfg.env.obstacle_x_range)));
  f.push_back(scalar<double>("scene", "obstacle_y_jitter", SDRL_REF(d.cfg.env.obstacle_y_jitter)));
  f.push_back(scalar<double>("scene", "eef_radius", SDRL_REF(d.cfg.env.eef_radius)));
  f.push_back(scalar<double>("scene", "stiffness", SDRL_REF(d.cfg.env.stiffness)));
  f.push_back(scalar<double>("scene", "action_scale", SDRL_REF(d.cfg.env.action_scale)));
  f.push_back(scalar<double>("scene", "dt", SDRL_REF(d.cfg.env.dt)));
  f.push_back(scalar<int>("scene", "max_steps", SDRL_REF(d.cfg.env.max_steps)));
  f.push_back(scalar<double>("scene", "grasp_radius", SDRL_REF(d.cfg.env.grasp.grasp_radius)));
  f.push_back(scalar<double>("scene", "lift_height", SDRL_REF(d.cfg.env.grasp.lift_height)));
  f.push_back(scalar<double>("scene", "proximity_radius", SDRL_REF(d.cfg.env.proximity_radius)));

  // arm
  f.push_back(scalar<double>("arm", "max_joint_speed", SDRL_REF(d.max_joint_speed)));
  f.push_back(vector<kinematics::JointVector>("arm", "home", SDRL_REF(d.cfg.env.home)));
  f.push_back(scalar<double>("arm", "ik_damping", SDRL_REF(d.cfg.env.ik.damping)));
  f.push_back(scalar<int>("arm", "ik_max_iterations", SDRL_REF(d.cfg.env.ik.max_iterations)));
  f.push_back(scalar<double>("arm", "ik_tolerance", SDRL_REF(d.cfg.env.ik.tolerance)));
  for (int i = 0; i < kNumJoints; ++i) {
    const std::string j = "joint" + std::to_string(i + 1) + "_";
    f.push_back(scalar<double>("arm", j + "a", [i](Draft& d) -> auto& { return d.links[i].a; }));
    f.push_back(scalar<double>("arm", j + "d", [i](Draft& d) -> auto& { return d.links[i].d; }));
    f.push_back(scalar<double>("arm", j + "alpha", [i](Draft& d) -> auto& { return d.links[i].alpha; }));
    f.push_back(scalar<double>("arm", j + "theta_offset",
                               [i](Draft& d) -> auto& { return d.links[i].theta_offset; }));
    f.push_back(scalar<double>("arm", j + "min", [i](Draft& d) -> auto& { return d.limits[i].min; }));
    f.push_back(scalar<double>("arm", j + "max", [i](Draft& d) -> auto& { return d.limits[i].max; }));
  }
  return f;
}

#undef SDRL_REF

const std::vector<Field>& fields() {
  static const std::vector<Field> all = build_fields();
  return all;
}

const std::vector<std::string> kSectionOrder{"run", "reward", "tqc", "scene", "arm"};

std::string ini_value(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i].dump();
    return out;
  }
  return v.dump();
}

RunConfig finish(const Draft& d) {
  RunConfig c = d.cfg;
  try {
    c.env.arm = kinematics::ArmModel(d.links, d.limits, d.max_joint_speed);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("[arm] ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace

env::Scenario parse_scenario(const std::string& text) {
  if (text == "normal") return env::Scenario::Normal;
  if (text == "obstacle") return env::Scenario::StaticObstacle;
  throw ConfigError("unknown scenario '" + text + "' (expected normal or obstacle)");
}

env::RewardMode parse_reward_mode(const std::string& text) {
  if (text == "drl") return env::RewardMode::Drl;
  if (text == "sd-drl") return env::RewardMode::SdDrl;
  throw ConfigError("unknown reward mode '" + text + "' (expected drl or sd-drl)");
}

void RunConfig::validate() const {
  if (train_steps <= 0) throw ConfigError("[run] steps must be positive");
  if (eval_every <= 0) throw ConfigError("[run] eval_every must be positive");
  if (eval_episodes <= 0) throw ConfigError("[run] eval_episodes must be positive");
  if (checkpoint_every < 0) throw ConfigError("[run] checkpoint_every must be >= 0");
  if (workers < 1) throw ConfigError("[run] workers must be >= 1");
  try {
    env.reward.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("[reward] ") + e.what());
  }
  try {
    tqc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("[tqc] ") + e.what());
  }
  try {
    env::GraspEnv probe(env);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("[scene] ") + e.what());
  }
}

RunConfig parse_run_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }

  std::map<std::string, std::map<std::string, const Field*>> index;
  for (const auto& f : fields()) index[f.section][f.key] = &f;

  Draft draft = draft_of(RunConfig{});
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("key '" + section + "' outside a section");
    const auto sec = index.find(section);
    if (sec == index.end()) throw ConfigError("unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      const auto f = sec->second.find(key);
      if (f == sec->second.end()) throw ConfigError("unknown key [" + section + "] " + key);
      try {
        f->second->set(draft, value.data());
      } catch (const ConfigError& e) {
        throw ConfigError("[" + section + "] " + key + ": " + e.what());
      }
    }
  }
  return finish(draft);
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str());
}

std::string format_run_config(const RunConfig& config) {
  const Draft d = draft_of(config);
  std::ostringstream out;
  for (const auto& section : kSectionOrder) {
    if (section != kSectionOrder.front()) out << '\n';
    out << '[' << section << "]\n";
    for (const auto& f : fields()) {
      if (f.section == section) out << f.key << " = " << ini_value(f.get(d)) << '\n';
    }
  }
  return out.str();
}

json to_json(const RunConfig& config) {
  const Draft d = draft_of(config);
  json j = json::object();
  for (const auto& f : fields()) j[f.section][f.key] = f.get(d);
  return j;
}

}  // namespace sdrl::app

#include "sdrl/policies.hpp"

#include <algorithm>
#include <stdexcept>

namespace sdrl::tqc {

ScriptedPolicy::ScriptedPolicy(ScriptedOptions options) : options_(options) {
  if (!(options_.action_scale > 0.0) || !(options_.max_step > 0.0)) {
    throw std::invalid_argument("ScriptedPolicy: action_scale and max_step must be positive");
  }
}

env::Action ScriptedPolicy::act(const env::Observation& obs) {
  const Eigen::Vector3d& eef = obs.eef_position;
  const Eigen::Vector3d& cube = obs.cube_position;
  Eigen::Vector3d goal;
  double gripper = -1.0;
  if (obs.grasped) {
    goal = eef + Eigen::Vector3d(0.0, 0.0, options_.max_step);
    gripper = 1.0;
  } else {
    const double lateral = (cube - eef).head<2>().norm();
    const Eigen::Vector3d hover = cube + Eigen::Vector3d(0.0, 0.0, options_.hover_height);
    if (options_.reach_only || lateral > options_.align_tolerance) {
      goal = hover;
    } else {
      goal = cube;
    }
    if (!options_.reach_only && (cube - eef).norm() <= options_.close_radius) gripper = 1.0;
  }
  Eigen::Vector3d step = goal - eef;
  if (step.norm() > options_.max_step) step *= options_.max_step / step.norm();
  env::Action a;
  a.delta_position = (step / options_.action_scale).cwiseMax(-1.0).cwiseMin(1.0);
  a.gripper = gripper;
  return a;
}

env::Action RandomPolicy::act(const env::Observation&) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  env::Action a;
  a.delta_position = Eigen::Vector3d(u(rng_), u(rng_), u(rng_));
  a.gripper = u(rng_);
  return a;
}

ActorPolicy::ActorPolicy(std::shared_ptr<const Actor> actor, nn::ParameterSet params)
    : actor_(std::move(actor)), params_(std::move(params)) {
  if (!actor_) throw std::invalid_argument("ActorPolicy: null actor");
  actor_->net().check(params_);
  if (actor_->obs_dim() != env::kObservationDim || actor_->act_dim() != env::kActionDim) {
    throw std::invalid_argument("ActorPolicy: actor dimensions do not match the environment");
  }
}

ActorPolicy ActorPolicy::from_agent(const TqcAgent& agent) {
  return ActorPolicy(std::make_shared<Actor>(agent.actor()), agent.actor_params());
}

ActorPolicy ActorPolicy::from_checkpoint(const std::filesystem::path& path) {
  return from_agent(TqcAgent::load(path));
}

env::Action ActorPolicy::act(const env::Observation& obs) {
  const auto flat = obs.to_array();
  const nn::Vector x = Eigen::Map<const nn::Vector>(flat.data(), env::kObservationDim);
  const auto s = select_action(*actor_, params_, x, false, nullptr);
  return env::Action::from_span(std::span<const double>(s.action.data(), env::kActionDim));
}

}  // namespace sdrl::tqc

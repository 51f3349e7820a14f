#include <gtest/gtest.h>

#include <random>

#include "oracles/reward_terms.hpp"
#include "sdrl/env.hpp"
#include "sdrl/episode_log.hpp"
#include "sdrl/policies.hpp"
#include "sdrl/rollout.hpp"

using namespace sdrl;
using namespace sdrl::env;

namespace {

Action down(double z) {
  Action a;
  a.delta_position = Eigen::Vector3d(0.0, 0.0, z);
  return a;
}

TransitionEvents events_of(const oracle::Flags& f, double d) {
  TransitionEvents e;
  e.distance_d = d;
  e.grasp_secured = f.secured;
  e.grasp_success = f.success;
  e.grasp_attempt_failed = f.failed;
  e.speed_violation = f.speed;
  e.ik_failure = f.ik;
  e.collision_env = f.env;
  e.collision_cube = f.cube;
  e.collision_obstacle = f.obstacle;
  e.collision_velocity_exceeded = f.coll_vel;
  return e;
}

oracle::Flags flags_from_bits(unsigned bits) {
  oracle::Flags f;
  bool* all[] = {&f.secured, &f.success, &f.failed, &f.speed, &f.ik, &f.env, &f.cube, &f.obstacle, &f.coll_vel};
  for (int i = 0; i < 9; ++i) *all[i] = (bits >> i) & 1u;
  return f;
}

}  // namespace

TEST(ComputeReward, TableExamples) {
  RewardConfig sd;
  RewardConfig drl;
  drl.mode = RewardMode::Drl;

  TransitionEvents e;
  e.distance_d = 0.5;
  EXPECT_DOUBLE_EQ(compute_reward(e, sd), -0.5);

  e.grasp_attempt_failed = true;
  EXPECT_NEAR(compute_reward(e, drl), -0.51, 1e-12);

  TransitionEvents c;
  c.distance_d = 0.1;
  c.collision_env = true;
  c.collision_impact_speed = 0.3;
  c.collision_velocity_exceeded = true;
  EXPECT_NEAR(compute_reward(c, sd), -5.6, 1e-12);

  TransitionEvents g;
  g.grasp_secured = true;
  g.grasp_success = true;
  EXPECT_DOUBLE_EQ(compute_reward(g, sd), 15.0);
}

TEST(ComputeReward, MatchesTermByTermOracleOnAllFlagSubsets) {
  for (int mode = 0; mode < 2; ++mode) {
    RewardConfig rc;
    rc.mode = mode == 0 ? RewardMode::Drl : RewardMode::SdDrl;
    for (double d : {0.0, 0.5}) {
      for (unsigned bits = 0; bits < (1u << 9); ++bits) {
        const auto f = flags_from_bits(bits);
        EXPECT_NEAR(compute_reward(events_of(f, d), rc), oracle::reward_terms(d, f, mode == 1), 1e-12)
            << "bits " << bits << " mode " << mode;
      }
    }
  }
}

TEST(ComputeReward, ModesAgreeWhenNoSafetyFlagIsSet) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ud(0.0, 1.5);
  std::bernoulli_distribution coin(0.5);
  RewardConfig sd, drl;
  drl.mode = RewardMode::Drl;
  for (int k = 0; k < 1000; ++k) {
    TransitionEvents e;
    e.distance_d = ud(rng);
    e.grasp_secured = coin(rng);
    e.grasp_success = coin(rng);
    e.grasp_attempt_failed = coin(rng);
    EXPECT_EQ(compute_reward(e, sd), compute_reward(e, drl));
  }
}

TEST(RewardConfig, ValidatesSigns) {
  RewardConfig rc;
  EXPECT_NO_THROW(rc.validate());
  rc.coll_cost = 1.0;
  EXPECT_THROW(rc.validate(), std::invalid_argument);
  rc = {};
  rc.grip_rew = -1.0;
  EXPECT_THROW(rc.validate(), std::invalid_argument);
  rc = {};
  rc.force_failure_threshold = 0.0;
  EXPECT_THROW(rc.validate(), std::invalid_argument);
}

TEST(CheckGrasp, FarCloseFails) {
  const auto cube = world::default_scene().cube;
  const auto o = check_grasp({}, cube.center + Eigen::Vector3d(0.2, 0, 0), 1.0, cube, cube.center.z());
  EXPECT_TRUE(o.grasp_attempt_failed);
  EXPECT_FALSE(o.grasp_success);
  EXPECT_FALSE(o.lifted);
}

TEST(CheckGrasp, CloseNearThenLift) {
  const auto cube = world::default_scene().cube;
  const double rest = cube.center.z();
  Eigen::Vector3d eef = cube.center + Eigen::Vector3d(0.005, 0, 0);
  auto o = check_grasp({}, eef, 1.0, cube, rest);
  EXPECT_TRUE(o.newly_secured);
  EXPECT_TRUE(o.grasp_success);
  EXPECT_FALSE(o.lifted);
  eef.z() += 0.06;
  o = check_grasp(o.state, eef, 1.0, o.cube, rest);
  EXPECT_TRUE(o.grasp_success);
  EXPECT_FALSE(o.newly_secured);
  EXPECT_TRUE(o.lifted);
  EXPECT_NEAR(o.cube.center.z() - rest, 0.06, 1e-12);
}

TEST(CheckGrasp, NeverClosingDoesNothing) {
  const auto cube = world::default_scene().cube;
  GraspState s;
  for (int k = 0; k < 20; ++k) {
    const auto o = check_grasp(s, cube.center, -1.0, cube, cube.center.z());
    EXPECT_FALSE(o.grasp_success || o.grasp_attempt_failed || o.lifted || o.newly_secured);
    s = o.state;
  }
}

TEST(Reset, SameSeedSameObservation) {
  GraspEnv a, b;
  const auto oa = a.reset(99, Scenario::StaticObstacle).to_array();
  const auto ob = b.reset(99, Scenario::StaticObstacle).to_array();
  EXPECT_EQ(oa, ob);
}

TEST(Reset, NormalScenarioHasNoObstacle) {
  GraspEnv e;
  const auto o = e.reset(5, Scenario::Normal);
  EXPECT_EQ(o.obstacle_position, Eigen::Vector3d::Zero());
  EXPECT_FALSE(e.scene().obstacle_present());
  EXPECT_TRUE(e.reset(5, Scenario::StaticObstacle).obstacle_position.norm() > 0.0);
}

TEST(Reset, CubePositionsCoverRegionUniformly) {
  GraspEnv e;
  const auto& c = e.config();
  std::array<int, 16> bins{};
  const int n = 1000;
  for (int s = 0; s < n; ++s) {
    const auto o = e.reset(derive_seed(7, s));
    const double fx = (o.cube_position.x() - c.cube_region_min.x()) / (c.cube_region_max.x() - c.cube_region_min.x());
    const double fy = (o.cube_position.y() - c.cube_region_min.y()) / (c.cube_region_max.y() - c.cube_region_min.y());
    ASSERT_GE(fx, 0.0);
    ASSERT_LT(fx, 1.0);
    ASSERT_GE(fy, 0.0);
    ASSERT_LT(fy, 1.0);
    ++bins[static_cast<int>(fx * 4) * 4 + static_cast<int>(fy * 4)];
  }
  double chi2 = 0.0;
  const double expected = n / 16.0;
  for (int b : bins) chi2 += (b - expected) * (b - expected) / expected;
  EXPECT_LT(chi2, 30.578);  // chi-square 0.99 quantile, 15 dof
}

TEST(Step, UsageErrors) {
  GraspEnv e;
  EXPECT_THROW(e.step(Action{}), std::logic_error);
  e.reset(1);
  while (!e.done()) e.step(Action{});
  EXPECT_THROW(e.step(Action{}), std::logic_error);
}

TEST(Step, ZeroActionInFreeSpaceIsDistanceOnly) {
  for (auto mode : {RewardMode::Drl, RewardMode::SdDrl}) {
    EnvConfig cfg;
    cfg.reward.mode = mode;
    GraspEnv e(cfg);
    const auto o = e.reset(3);
    const auto r = e.step(Action{});
    EXPECT_FALSE(r.terminated);
    EXPECT_DOUBLE_EQ(r.reward, -(o.cube_position - o.eef_position).norm());
    EXPECT_DOUBLE_EQ(r.reward, -r.events.distance_d);
  }
}

TEST(Step, ObservationLayoutInvariant) {
  GraspEnv e;
  e.reset(12);
  tqc::RandomPolicy p(3);
  auto o = e.observation();
  while (!e.done()) {
    o = e.step(p.act(o)).observation;
    EXPECT_EQ(o.cube_relative, o.cube_position - o.eef_position);
    EXPECT_EQ(o.to_array().size(), 17u);
  }
}

TEST(Step, TableImpactAbove100NewtonsTerminates) {
  GraspEnv e;
  e.reset(1);
  StepResult r;
  while (!e.done()) r = e.step(down(-0.75));
  EXPECT_TRUE(r.terminated);
  EXPECT_TRUE(r.events.collision_env);
  EXPECT_NEAR(r.events.collision_force, 120.0, 1.0);
  EXPECT_TRUE(r.events.collision_velocity_exceeded);
}

TEST(Step, ObstacleImpactAboveThresholdTerminatesOnForce) {
  GraspEnv e;
  e.reset(1, Scenario::StaticObstacle);
  StepResult r;
  while (!e.done()) r = e.step(down(-1.0));
  EXPECT_TRUE(r.terminated);
  EXPECT_TRUE(r.events.collision_obstacle);
  EXPECT_FALSE(r.events.collision_env);
  EXPECT_GT(r.events.collision_force, 100.0);
}

TEST(Step, SlowObstacleContactDoesNotTerminate) {
  GraspEnv e;
  e.reset(1, Scenario::StaticObstacle);
  StepResult r;
  int contacts = 0;
  while (!e.done() && contacts == 0) {
    r = e.step(down(-0.5));
    contacts += r.events.collision_obstacle;
  }
  ASSERT_EQ(contacts, 1);
  EXPECT_LE(r.events.collision_force, 100.0);
  EXPECT_FALSE(r.terminated);
}

TEST(Step, ShieldHoldsJointsOnOverSpeed) {
  EnvConfig cfg;
  cfg.arm = kinematics::ArmModel(cfg.arm.links(), cfg.arm.limits(), 0.05);
  GraspEnv e(cfg);
  e.reset(2);
  const auto q = e.joints();
  const auto r = e.step(down(-1.0));
  EXPECT_TRUE(r.events.speed_violation);
  EXPECT_FALSE(r.events.ik_failure);
  EXPECT_EQ(e.joints(), q);
  EXPECT_NEAR(r.reward, -r.events.distance_d - 0.5, 1e-12);
}

TEST(Step, ShieldHoldsJointsOnIkFailure) {
  EnvConfig cfg;
  cfg.action_scale = 5.0;
  GraspEnv e(cfg);
  e.reset(2);
  const auto q = e.joints();
  Action a;
  a.delta_position = Eigen::Vector3d(1.0, 1.0, 1.0);
  const auto r = e.step(a);
  EXPECT_TRUE(r.events.ik_failure);
  EXPECT_FALSE(r.events.speed_violation);
  EXPECT_EQ(e.joints(), q);
}

TEST(Step, TerminationSoundnessUnderRandomPlay) {
  GraspEnv e;
  tqc::RandomPolicy p(8);
  for (int ep = 0; ep < 30; ++ep) {
    auto o = e.reset(ep, ep % 2 ? Scenario::StaticObstacle : Scenario::Normal);
    while (!e.done()) {
      const auto q = e.joints();
      const auto r = e.step(p.act(o));
      o = r.observation;
      EXPECT_FALSE(r.terminated && r.truncated);
      if (r.terminated) {
        EXPECT_TRUE(r.events.grasp_success || r.events.collision_env || r.events.collision_force > 100.0);
      }
      if (r.events.ik_failure || r.events.speed_violation) EXPECT_EQ(e.joints(), q);
      if (r.events.collision_velocity_exceeded) EXPECT_TRUE(r.events.any_collision());
    }
    EXPECT_LE(e.steps(), 200);
  }
}

TEST(Step, ScriptedPolicyGraspsInNormalScenario) {
  GraspEnv e;
  tqc::ScriptedPolicy p;
  for (int ep = 0; ep < 10; ++ep) {
    const auto trace = run_episode(e, p, ep, derive_seed(1, ep), Scenario::Normal, {});
    EXPECT_TRUE(trace.record.success);
    EXPECT_TRUE(trace.steps.back().terminated);
    EXPECT_TRUE(trace.steps.back().events.grasp_success);
  }
}

TEST(Step, TrajectoryIsBitwiseDeterministic) {
  auto run = [] {
    GraspEnv e;
    tqc::RandomPolicy p(77);
    const auto t = run_episode(e, p, 0, 1234, Scenario::StaticObstacle, {});
    std::string s;
    for (const auto& r : t.steps) s += to_json(r).dump();
    return s;
  };
  EXPECT_EQ(run(), run());
}

TEST(ScriptedPolicy, SignAndCloseChecks) {
  tqc::ScriptedPolicy p;
  Observation o;
  o.eef_position = Eigen::Vector3d(0.4, 0.0, 0.0);
  o.cube_position = Eigen::Vector3d(0.5, 0.0, 0.0);
  o.cube_relative = o.cube_position - o.eef_position;
  EXPECT_GT(p.act(o).delta_position.x(), 0.0);
  o.eef_position = o.cube_position + Eigen::Vector3d(0.001, 0.0, 0.0);
  EXPECT_GE(p.act(o).gripper, 0.0);
}

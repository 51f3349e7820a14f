#include <random>

#include <benchmark/benchmark.h>

#include "sdrl/env.hpp"
#include "sdrl/kinematics.hpp"
#include "sdrl/nn.hpp"
#include "sdrl/policies.hpp"
#include "sdrl/replay_buffer.hpp"
#include "sdrl/tqc.hpp"
#include "sdrl/world.hpp"

using namespace sdrl;

namespace {

void BM_ForwardKinematics(benchmark::State& state) {
  const auto arm = kinematics::ArmModel::ur5();
  const auto q = env::EnvConfig::default_home();
  for (auto _ : state) benchmark::DoNotOptimize(kinematics::forward_kinematics(arm, q));
}
BENCHMARK(BM_ForwardKinematics);

void BM_InverseKinematicsSmallStep(benchmark::State& state) {
  const auto arm = kinematics::ArmModel::ur5();
  const auto q = env::EnvConfig::default_home();
  auto target = kinematics::forward_kinematics(arm, q);
  target.position += Eigen::Vector3d(0.01, -0.01, 0.005);
  for (auto _ : state) benchmark::DoNotOptimize(kinematics::inverse_kinematics(arm, target, q));
}
BENCHMARK(BM_InverseKinematicsSmallStep);

void BM_DetectCollisions(benchmark::State& state) {
  auto scene = world::default_scene();
  scene.obstacle = world::Box{Eigen::Vector3d(0.43, 0.1, -0.05), world::default_obstacle_half_extents()};
  const Eigen::Vector3d eef(0.55, 0.1, -0.06), vel(0.0, 0.0, -0.2);
  for (auto _ : state) benchmark::DoNotOptimize(world::detect_collisions(scene, eef, 0.02, vel));
}
BENCHMARK(BM_DetectCollisions);

void BM_EnvStep(benchmark::State& state) {
  env::GraspEnv e;
  tqc::RandomPolicy policy(1);
  std::uint64_t seed = 0;
  auto obs = e.reset(seed++, env::Scenario::StaticObstacle);
  for (auto _ : state) {
    if (e.done()) obs = e.reset(seed++, env::Scenario::StaticObstacle);
    obs = e.step(policy.act(obs)).observation;
  }
}
BENCHMARK(BM_EnvStep);

void BM_MlpForwardBatch(benchmark::State& state) {
  std::mt19937_64 rng(1);
  nn::Mlp net({21, 64, 64, 25});
  const auto p = net.init(rng);
  const nn::Matrix x = nn::Matrix::Random(21, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(p, x));
}
BENCHMARK(BM_MlpForwardBatch)->Arg(1)->Arg(128)->Arg(256);

void BM_CriticLossWithGradient(benchmark::State& state) {
  std::mt19937_64 rng(2);
  nn::Mlp critic({21, 64, 64, 25});
  const auto p = critic.init(rng);
  const int b = static_cast<int>(state.range(0));
  const nn::Matrix in = nn::Matrix::Random(21, b), targets = nn::Matrix::Random(46, b);
  const auto taus = tqc::quantile_fractions(25);
  nn::ParameterSet g;
  for (auto _ : state) benchmark::DoNotOptimize(tqc::critic_loss(critic, p, in, targets, taus, &g));
}
BENCHMARK(BM_CriticLossWithGradient)->Arg(128)->Arg(256);

void BM_TrainStep(benchmark::State& state) {
  tqc::TqcConfig cfg;
  cfg.batch_size = static_cast<int>(state.range(0));
  tqc::TqcAgent agent(env::kObservationDim, env::kActionDim, cfg, 3);
  tqc::ReplayBuffer buffer(4096, env::kObservationDim, env::kActionDim);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  for (int i = 0; i < 4096; ++i) {
    tqc::Transition t;
    t.observation.resize(env::kObservationDim);
    t.next_observation.resize(env::kObservationDim);
    t.action.resize(env::kActionDim);
    for (auto& v : t.observation) v = g(rng);
    for (auto& v : t.next_observation) v = g(rng);
    for (auto& v : t.action) v = std::tanh(g(rng));
    t.reward = g(rng);
    buffer.add(t);
  }
  for (auto _ : state) benchmark::DoNotOptimize(agent.train_step(buffer));
}
BENCHMARK(BM_TrainStep)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();

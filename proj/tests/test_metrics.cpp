#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "sdrl/metrics.hpp"

using namespace sdrl;
using namespace sdrl::metrics;

namespace {

EpisodeRecord rec(double ret, long steps, bool success = false, bool failed = false) {
  EpisodeRecord r;
  r.return_sum = ret;
  r.steps = steps;
  r.success = success;
  r.terminated_by_failure = failed;
  return r;
}

std::vector<EpisodeRecord> random_log(std::mt19937_64& rng, int n) {
  std::uniform_int_distribution<long> steps(1, 200), count(0, 2);
  std::uniform_real_distribution<double> ret(-50.0, 20.0);
  std::bernoulli_distribution coin(0.4);
  std::vector<EpisodeRecord> out;
  for (int i = 0; i < n; ++i) {
    EpisodeRecord r = rec(ret(rng), steps(rng), coin(rng), coin(rng));
    if (coin(rng)) r.violations.speed = count(rng);
    if (coin(rng)) r.violations.collision = count(rng);
    if (coin(rng)) r.violations.velocity = count(rng);
    out.push_back(r);
  }
  return out;
}

env::StepRecord step(long episode, double reward, bool terminated = false) {
  env::StepRecord s;
  s.episode = episode;
  s.reward = reward;
  s.terminated = terminated;
  return s;
}

}  // namespace

TEST(AverageReturn, DividesByFailedEpisodeLength) {
  std::vector<EpisodeRecord> one{rec(-5.0, 10, false, true)};
  EXPECT_DOUBLE_EQ(average_return_normalized(one), -0.5);
  std::vector<EpisodeRecord> zero{rec(0.0, 10, false, true), rec(0.0, 37)};
  EXPECT_EQ(average_return_normalized(zero), 0.0);
  std::vector<EpisodeRecord> fallback{rec(1.0, 10), rec(3.0, 10)};
  EXPECT_DOUBLE_EQ(average_return_normalized(fallback), 0.2);
}

TEST(Metrics, EmptyInputIsAnError) {
  std::vector<EpisodeRecord> none;
  EXPECT_THROW(average_return_normalized(none), std::invalid_argument);
  EXPECT_THROW(average_violations(none), std::invalid_argument);
  EXPECT_THROW(success_rate(none), std::invalid_argument);
  EXPECT_THROW(safety_driven_success_rate(none), std::invalid_argument);
}

TEST(AverageViolations, PerEpisodeMeans) {
  std::vector<EpisodeRecord> r{rec(0, 5), rec(0, 5)};
  r[0].violations.collision = 1;
  EXPECT_DOUBLE_EQ(average_violations(r).collision, 0.5);
  r[0].violations.collision = 0;
  const auto m = average_violations(r);
  EXPECT_EQ(m.collision + m.obstacle_collision + m.speed + m.velocity + m.velocity_during_collision, 0.0);
}

TEST(AverageViolations, CollisionFixture) {
  std::vector<EpisodeRecord> r(1000, rec(0, 10));
  for (int i = 0; i < 48; ++i) r[i * 20].violations.collision = 1;
  EXPECT_NEAR(average_violations(r).collision, 0.048, 1e-15);
}

TEST(SuccessRate, Fixtures) {
  std::vector<EpisodeRecord> r(10, rec(0, 5));
  EXPECT_EQ(success_rate(r), 0.0);
  for (int i = 0; i < 3; ++i) r[i].success = true;
  EXPECT_DOUBLE_EQ(success_rate(r), 0.3);

  std::vector<EpisodeRecord> eval(436, rec(0, 50));
  for (int i = 0; i < 157; ++i) eval[i].success = true;
  for (int i = 150; i < 157; ++i) eval[i].violations.speed = 1;
  EXPECT_NEAR(success_rate(eval), 0.36, 0.005);
  EXPECT_NEAR(safety_driven_success_rate(eval), 0.34, 0.005);
}

TEST(SafetyDrivenSuccess, ViolationDisqualifies) {
  std::vector<EpisodeRecord> r{rec(0, 5, true), rec(0, 5, true)};
  EXPECT_EQ(safety_driven_success_rate(r), success_rate(r));
  r[0].violations.speed = 1;
  EXPECT_DOUBLE_EQ(success_rate(r), 1.0);
  EXPECT_DOUBLE_EQ(safety_driven_success_rate(r), 0.5);
}

TEST(Metrics, OrderingPermutationAndConcatenation) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> size(1, 12);
  for (int k = 0; k < 1000; ++k) {
    auto a = random_log(rng, size(rng));
    const double sr = success_rate(a), sd = safety_driven_success_rate(a);
    EXPECT_LE(0.0, sd);
    EXPECT_LE(sd, sr);
    EXPECT_LE(sr, 1.0);

    auto shuffled = a;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_DOUBLE_EQ(success_rate(shuffled), sr);
    EXPECT_DOUBLE_EQ(safety_driven_success_rate(shuffled), sd);
    EXPECT_NEAR(average_return_normalized(shuffled), average_return_normalized(a), 1e-12);
    EXPECT_NEAR(average_violations(shuffled).speed, average_violations(a).speed, 1e-12);

    const auto b = random_log(rng, size(rng));
    auto ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    EXPECT_NEAR(success_rate(ab), (na * sr + nb * success_rate(b)) / (na + nb), 1e-12);
    EXPECT_NEAR(safety_driven_success_rate(ab), (na * sd + nb * safety_driven_success_rate(b)) / (na + nb), 1e-12);
  }
}

TEST(EpisodeAccumulator, CountsEventsAndFailures) {
  EpisodeAccumulator acc;
  env::TransitionEvents e;
  e.speed_violation = true;
  acc.add(-1.0, false, e);
  e = {};
  e.collision_cube = true;
  e.collision_velocity_exceeded = true;
  e.collision_force = 120.0;
  acc.add(-1.0, false, e);
  e = {};
  e.collision_env = true;
  acc.add(-5.0, true, e);
  const auto& r = acc.record();
  EXPECT_EQ(r.steps, 3);
  EXPECT_DOUBLE_EQ(r.return_sum, -7.0);
  EXPECT_EQ(r.violations.speed, 1);
  EXPECT_EQ(r.violations.collision, 1);
  EXPECT_EQ(r.violations.velocity_during_collision, 1);
  EXPECT_EQ(r.failures, 3);
  EXPECT_TRUE(r.terminated_by_failure);
  EXPECT_FALSE(r.success);
}

TEST(EpisodeAccumulator, CubeContactIsNotAViolation) {
  EpisodeAccumulator acc;
  env::TransitionEvents e;
  e.collision_cube = true;
  e.collision_force = 20.0;
  acc.add(0.0, false, e);
  EXPECT_EQ(acc.record().violations.total(), 0);
  EXPECT_EQ(acc.record().failures, 0);
}

TEST(EpisodesFromSteps, GroupsConsecutiveRuns) {
  const std::vector<env::StepRecord> log{step(0, 1.0), step(0, 2.0, true), step(1, -1.0), step(1, -1.0),
                                         step(1, -1.0)};
  const auto eps = episodes_from_steps(log);
  ASSERT_EQ(eps.size(), 2u);
  EXPECT_EQ(eps[0].steps, 2);
  EXPECT_DOUBLE_EQ(eps[0].return_sum, 3.0);
  EXPECT_EQ(eps[1].steps, 3);
}

TEST(Summary, JsonFields) {
  std::vector<EpisodeRecord> r{rec(1.0, 10, true), rec(-2.0, 4, false, true)};
  const auto j = to_json(summarize(r));
  EXPECT_EQ(j["episodes"], 2);
  EXPECT_EQ(j["successes"], 1);
  EXPECT_EQ(j["failed_episodes"], 1);
  EXPECT_DOUBLE_EQ(j["success_rate"].get<double>(), 0.5);
  EXPECT_TRUE(j.contains("average_violations"));
}

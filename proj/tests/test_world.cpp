#include <gtest/gtest.h>

#include <random>

#include "oracles/box_distance.hpp"
#include "sdrl/world.hpp"

using namespace sdrl::world;

namespace {

oracle::Aabb aabb(const Box& b) {
  return {{b.min().x(), b.min().y(), b.min().z()}, {b.max().x(), b.max().y(), b.max().z()}};
}

Scene obstacle_scene() {
  Scene s = default_scene();
  Box bar;
  bar.half_extents = default_obstacle_half_extents();
  bar.center = Eigen::Vector3d(0.43, s.cube.center.y(), s.table_height + bar.half_extents.z());
  s.obstacle = bar;
  return s;
}

}  // namespace

TEST(DefaultScene, CubeRestsOnTableInsideWorkspace) {
  const auto s = default_scene();
  EXPECT_DOUBLE_EQ(s.cube.center.z(), s.table_height + s.cube.half_extents.z());
  EXPECT_TRUE(s.workspace.contains(s.cube));
  EXPECT_FALSE(s.obstacle_present());
  EXPECT_NEAR(2.0 * s.cube.half_extents.x(), 0.05, 1e-15);
  EXPECT_NEAR(2.0 * default_obstacle_half_extents().y(), 0.40, 1e-15);
}

TEST(DetectCollisions, SeparatedGeometryGivesNothing) {
  const auto s = obstacle_scene();
  EXPECT_TRUE(detect_collisions(s, Eigen::Vector3d(0.4, 0.1, 0.3), 0.05, Eigen::Vector3d(0, 0, -1)).empty());
}

TEST(DetectCollisions, CenterInsideCubeMatchesDistanceOracle) {
  const auto s = default_scene();
  const Eigen::Vector3d c = s.cube.center + Eigen::Vector3d(0.004, -0.007, 0.002);
  const auto reports = detect_collisions(s, c, 0.02, Eigen::Vector3d::Zero());
  std::vector<ContactReport> cube;
  for (const auto& r : reports)
    if (r.body == Body::Cube) cube.push_back(r);
  ASSERT_EQ(cube.size(), 1u);
  EXPECT_NEAR(cube[0].penetration, oracle::sphere_penetration(aabb(s.cube), {c.x(), c.y(), c.z()}, 0.02), 1e-15);
}

TEST(DetectCollisions, TangentToTableIsAContact) {
  const auto s = default_scene();
  const double r = 0.05;
  const Eigen::Vector3d c(0.3, -0.2, s.table_height + r);
  const auto reports = detect_collisions(s, c, r, Eigen::Vector3d::Zero());
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_EQ(reports[0].body, Body::Table);
  EXPECT_EQ(reports[0].penetration, 0.0);
  EXPECT_EQ(reports[0].force, 0.0);
}

TEST(DetectCollisions, RandomPointsAgreeWithOracleAndStayOrdered) {
  const auto s = obstacle_scene();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ux(0.3, 0.7), uy(-0.1, 0.3), uz(-0.12, 0.0), uv(-0.5, 0.5);
  for (int k = 0; k < 2000; ++k) {
    const Eigen::Vector3d c(ux(rng), uy(rng), uz(rng));
    const Eigen::Vector3d v(uv(rng), uv(rng), uv(rng));
    const auto reports = detect_collisions(s, c, 0.02, v);
    for (std::size_t i = 1; i < reports.size(); ++i) EXPECT_LT(reports[i - 1].body, reports[i].body);
    for (const auto& r : reports) {
      EXPECT_GE(r.penetration, 0.0);
      EXPECT_GE(r.impact_speed, 0.0);
      EXPECT_DOUBLE_EQ(r.force, kDefaultStiffness * r.impact_speed);
      if (r.body == Body::Cube) {
        EXPECT_NEAR(r.penetration, oracle::sphere_penetration(aabb(s.cube), {c.x(), c.y(), c.z()}, 0.02), 1e-12);
      }
      if (r.body == Body::Obstacle) {
        EXPECT_NEAR(r.penetration, oracle::sphere_penetration(aabb(*s.obstacle), {c.x(), c.y(), c.z()}, 0.02), 1e-12);
      }
    }
    const auto again = detect_collisions(s, c, 0.02, v);
    ASSERT_EQ(again.size(), reports.size());
    for (std::size_t i = 0; i < again.size(); ++i) {
      EXPECT_EQ(again[i].body, reports[i].body);
      EXPECT_EQ(again[i].penetration, reports[i].penetration);
      EXPECT_EQ(again[i].force, reports[i].force);
    }
  }
}

TEST(DetectCollisions, ImpactSpeedIsInwardNormalComponent) {
  const auto s = default_scene();
  const Eigen::Vector3d c(0.3, -0.2, s.table_height + 0.01);
  auto r = detect_collisions(s, c, 0.02, Eigen::Vector3d(0.3, 0.0, -0.2));
  ASSERT_FALSE(r.empty());
  EXPECT_NEAR(r[0].impact_speed, 0.2, 1e-15);
  r = detect_collisions(s, c, 0.02, Eigen::Vector3d(0.0, 0.0, 0.2));
  EXPECT_EQ(r[0].impact_speed, 0.0);
}

TEST(DetectCollisions, HeldCubeIsIgnored) {
  const auto s = default_scene();
  CollisionOptions o;
  o.include_cube = false;
  EXPECT_TRUE(detect_collisions(s, s.cube.center + Eigen::Vector3d(0, 0, 0.02), 0.02, Eigen::Vector3d::Zero(), o)
                  .empty());
}

TEST(DetectCollisions, LeavingWorkspaceReportsBound) {
  const auto s = default_scene();
  const Eigen::Vector3d c(s.workspace.max.x() + 0.01, 0.0, 0.2);
  const auto r = detect_collisions(s, c, 0.02, Eigen::Vector3d::Zero());
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].body, Body::WorkspaceBound);
}

TEST(ContactForce, LinearModel) {
  EXPECT_EQ(contact_force(0.0), 0.0);
  EXPECT_EQ(contact_force(0.25, 400.0), 100.0);
  EXPECT_NEAR(contact_force(0.1, 400.0), 40.0, 1e-12);
  EXPECT_THROW(contact_force(-0.1), std::invalid_argument);
  EXPECT_THROW(contact_force(0.1, 0.0), std::invalid_argument);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int k = 0; k < 100; ++k) {
    const double v = u(rng);
    EXPECT_EQ(contact_force(2.0 * v), 2.0 * contact_force(v));
  }
}

TEST(ApplyDisturbance, AssessmentDefault) {
  const auto s = default_scene();
  const auto d = apply_disturbance(s, DisturbanceSpec::assessment_default());
  EXPECT_NEAR(d.table_height - s.table_height, 0.075, 1e-15);
  EXPECT_NEAR(2.0 * (d.cube.half_extents.x() - s.cube.half_extents.x()), 0.005, 1e-15);
  EXPECT_NEAR(d.cube.center.z(), d.table_height + d.cube.half_extents.z(), 1e-15);
}

TEST(ApplyDisturbance, IdentityAndInverse) {
  const auto s = obstacle_scene();
  EXPECT_EQ(apply_disturbance(s, {}), s);
  const auto round = apply_disturbance(apply_disturbance(s, {-0.075, 0.0}), {0.075, 0.0});
  EXPECT_NEAR(round.table_height, s.table_height, 1e-15);
  EXPECT_NEAR(round.cube.center.z(), s.cube.center.z(), 1e-15);
}

TEST(ApplyDisturbance, EscapingWorkspaceThrows) {
  EXPECT_THROW(apply_disturbance(default_scene(), {1.0, 0.0}), std::invalid_argument);
}

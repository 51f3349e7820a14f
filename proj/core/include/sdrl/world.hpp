#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace sdrl::world {

/// Axis-aligned box given by center and half extents.
struct Box {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d half_extents = Eigen::Vector3d::Zero();

  Eigen::Vector3d min() const { return center - half_extents; }
  Eigen::Vector3d max() const { return center + half_extents; }
  bool operator==(const Box&) const = default;
};

struct Bounds {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Zero();

  bool contains(const Box& box) const;
  bool contains(const Eigen::Vector3d& point) const;
  bool operator==(const Bounds&) const = default;
};

struct Scene {
  double table_height = -0.1;
  Bounds workspace;
  Box cube;
  std::optional<Box> obstacle;

  bool obstacle_present() const { return obstacle.has_value(); }
  bool operator==(const Scene&) const = default;
};

/// Table at z = -0.1, a 5 cm cube resting on it, no obstacle.
Scene default_scene();

/// Bar obstacle dimensions used by the static obstacle scenario (0.05 x 0.40 x 0.05 m).
Eigen::Vector3d default_obstacle_half_extents();

/// Order of this enum is the report order of detect_collisions.
enum class Body { Table, Cube, Obstacle, WorkspaceBound };

std::string_view to_string(Body body);

struct ContactReport {
  Body body = Body::Table;
  double penetration = 0.0;   // m, >= 0
  double impact_speed = 0.0;  // m/s, >= 0
  double force = 0.0;         // N, >= 0
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();  // outward from the body
};

inline constexpr double kDefaultStiffness = 400.0;      // N*s/m
inline constexpr double kDefaultEffectorRadius = 0.02;  // m

struct CollisionOptions {
  double stiffness = kDefaultStiffness;
  bool include_cube = true;  // false while the cube is held by the gripper
};

/// Signed distance from a point to a box surface (negative inside).
double signed_distance(const Box& box, const Eigen::Vector3d& point);

/// Sphere-vs-scene contacts, boundary-inclusive, sorted Table, Cube, Obstacle, WorkspaceBound.
std::vector<ContactReport> detect_collisions(const Scene& scene, const Eigen::Vector3d& eef_center,
                                             double eef_radius, const Eigen::Vector3d& eef_velocity,
                                             const CollisionOptions& options = {});

/// Distance from the sphere surface to the nearest physical body (table, cube, obstacle).
/// Workspace bounds are not counted.
double clearance(const Scene& scene, const Eigen::Vector3d& eef_center, double eef_radius,
                 bool include_cube = true);

/// Linear impact model: stiffness * impact_speed.
double contact_force(double impact_speed, double stiffness = kDefaultStiffness);

struct DisturbanceSpec {
  double surface_height_delta = 0.0;  // m
  double object_size_delta = 0.0;     // m, added to every cube edge

  static DisturbanceSpec assessment_default() { return {0.075, 0.005}; }
  bool operator==(const DisturbanceSpec&) const = default;
};

/// Raises the table, grows the cube and re-seats cube and obstacle on the new surface.
/// Throws std::invalid_argument if the result leaves the workspace.
Scene apply_disturbance(const Scene& scene, const DisturbanceSpec& spec);

}  // namespace sdrl::world

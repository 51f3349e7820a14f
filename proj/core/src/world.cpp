#include "sdrl/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sdrl::world {

namespace {

// Outward normal of a box at `point`. Inside or on the surface the nearest face wins.
Eigen::Vector3d box_normal(const Box& box, const Eigen::Vector3d& point) {
  const Eigen::Vector3d local = point - box.center;
  const Eigen::Vector3d q = local.cwiseAbs() - box.half_extents;
  if (q.maxCoeff() > 0.0) {
    const Eigen::Vector3d closest = local.cwiseMax(-box.half_extents).cwiseMin(box.half_extents);
    return (local - closest).normalized();
  }
  int axis = 0;
  q.maxCoeff(&axis);
  Eigen::Vector3d n = Eigen::Vector3d::Zero();
  n[axis] = local[axis] >= 0.0 ? 1.0 : -1.0;
  return n;
}

ContactReport make_contact(Body body, double penetration, const Eigen::Vector3d& normal,
                           const Eigen::Vector3d& velocity, double stiffness) {
  ContactReport c;
  c.body = body;
  c.penetration = std::max(0.0, penetration);
  c.normal = normal;
  c.impact_speed = std::max(0.0, -velocity.dot(normal));
  c.force = contact_force(c.impact_speed, stiffness);
  return c;
}

}  // namespace

bool Bounds::contains(const Eigen::Vector3d& point) const {
  return (point.array() >= min.array()).all() && (point.array() <= max.array()).all();
}

bool Bounds::contains(const Box& box) const { return contains(box.min()) && contains(box.max()); }

Scene default_scene() {
  Scene s;
  s.table_height = -0.1;
  s.workspace.min = Eigen::Vector3d(0.15, -0.35, -0.2);
  s.workspace.max = Eigen::Vector3d(0.85, 0.55, 0.45);
  s.cube.half_extents = Eigen::Vector3d::Constant(0.025);
  s.cube.center = Eigen::Vector3d(0.55, 0.10, s.table_height + 0.025);
  return s;
}

Eigen::Vector3d default_obstacle_half_extents() { return {0.025, 0.20, 0.025}; }

std::string_view to_string(Body body) {
  switch (body) {
    case Body::Table: return "table";
    case Body::Cube: return "cube";
    case Body::Obstacle: return "obstacle";
    case Body::WorkspaceBound: return "workspace";
  }
  return "unknown";
}

double signed_distance(const Box& box, const Eigen::Vector3d& point) {
  const Eigen::Vector3d q = (point - box.center).cwiseAbs() - box.half_extents;
  const double outside = q.cwiseMax(0.0).norm();
  const double inside = std::min(q.maxCoeff(), 0.0);
  return outside + inside;
}

std::vector<ContactReport> detect_collisions(const Scene& scene, const Eigen::Vector3d& eef_center,
                                             double eef_radius, const Eigen::Vector3d& eef_velocity,
                                             const CollisionOptions& options) {
  if (!(eef_radius > 0.0)) throw std::invalid_argument("detect_collisions: radius must be positive");
  std::vector<ContactReport> out;

  const double table_gap = (eef_center.z() - eef_radius) - scene.table_height;
  if (table_gap <= 0.0) {
    out.push_back(make_contact(Body::Table, -table_gap, Eigen::Vector3d::UnitZ(), eef_velocity,
                               options.stiffness));
  }

  auto box_contact = [&](Body body, const Box& box) {
    const double sd = signed_distance(box, eef_center);
    if (sd <= eef_radius) {
      out.push_back(make_contact(body, eef_radius - sd, box_normal(box, eef_center), eef_velocity,
                                 options.stiffness));
    }
  };
  if (options.include_cube) box_contact(Body::Cube, scene.cube);
  if (scene.obstacle) box_contact(Body::Obstacle, *scene.obstacle);

  // Walls of the workspace: the deepest overshoot is reported.
  double deepest = -std::numeric_limits<double>::infinity();
  Eigen::Vector3d wall_normal = Eigen::Vector3d::Zero();
  for (int axis = 0; axis < 3; ++axis) {
    const double low = scene.workspace.min[axis] - (eef_center[axis] - eef_radius);
    const double high = (eef_center[axis] + eef_radius) - scene.workspace.max[axis];
    if (low > deepest) {
      deepest = low;
      wall_normal = Eigen::Vector3d::Unit(axis);
    }
    if (high > deepest) {
      deepest = high;
      wall_normal = -Eigen::Vector3d::Unit(axis);
    }
  }
  if (deepest >= 0.0) {
    out.push_back(make_contact(Body::WorkspaceBound, deepest, wall_normal, eef_velocity,
                               options.stiffness));
  }
  return out;
}

double clearance(const Scene& scene, const Eigen::Vector3d& eef_center, double eef_radius,
                 bool include_cube) {
  double d = (eef_center.z() - scene.table_height) - eef_radius;
  if (include_cube) d = std::min(d, signed_distance(scene.cube, eef_center) - eef_radius);
  if (scene.obstacle) d = std::min(d, signed_distance(*scene.obstacle, eef_center) - eef_radius);
  return d;
}

double contact_force(double impact_speed, double stiffness) {
  if (!(impact_speed >= 0.0)) throw std::invalid_argument("contact_force: negative impact speed");
  if (!(stiffness > 0.0)) throw std::invalid_argument("contact_force: stiffness must be positive");
  return stiffness * impact_speed;
}

Scene apply_disturbance(const Scene& scene, const DisturbanceSpec& spec) {
  if (!std::isfinite(spec.surface_height_delta) || !std::isfinite(spec.object_size_delta)) {
    throw std::invalid_argument("apply_disturbance: non-finite delta");
  }
  Scene out = scene;
  out.table_height += spec.surface_height_delta;
  out.cube.half_extents.array() += spec.object_size_delta / 2.0;
  if ((out.cube.half_extents.array() <= 0.0).any()) {
    throw std::invalid_argument("apply_disturbance: cube shrinks to nothing");
  }
  out.cube.center.z() = out.table_height + out.cube.half_extents.z();
  if (out.obstacle) out.obstacle->center.z() += spec.surface_height_delta;

  if (out.table_height < out.workspace.min.z() || out.table_height > out.workspace.max.z() ||
      !out.workspace.contains(out.cube) || (out.obstacle && !out.workspace.contains(*out.obstacle))) {
    throw std::invalid_argument("apply_disturbance: geometry leaves the workspace bounds");
  }
  return out;
}

}  // namespace sdrl::world

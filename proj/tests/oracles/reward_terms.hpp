#pragma once

// Term-by-term reward sum with the coefficient table written out by hand.

#include <vector>

namespace oracle {

struct Flags {
  bool secured = false, success = false, failed = false;
  bool speed = false, ik = false, env = false, cube = false, obstacle = false, coll_vel = false;
};

struct Coefficients {
  double speed_cost = -0.5;
  double coll_cost = -5.0;
  double cube_coll_cost = -0.01;
  double obstacle_coll_cost = -0.5;
  double coll_vel_cost = -0.5;
  double gripper_cost = -0.01;
  double grip_rew = 5.0;
  double grip_prop_rew = 10.0;
  double ik_cost = -0.5;
};

inline double reward_terms(double d, const Flags& f, bool safety_terms, const Coefficients& c = {}) {
  std::vector<double> terms{-d};
  if (f.secured) terms.push_back(c.grip_rew);
  if (f.success) terms.push_back(c.grip_prop_rew);
  if (f.failed) terms.push_back(c.gripper_cost);
  if (safety_terms) {
    if (f.speed) terms.push_back(c.speed_cost);
    if (f.ik) terms.push_back(c.ik_cost);
    if (f.env) terms.push_back(c.coll_cost);
    if (f.cube) terms.push_back(c.cube_coll_cost);
    if (f.obstacle) terms.push_back(c.obstacle_coll_cost);
    if (f.coll_vel) terms.push_back(c.coll_vel_cost);
  }
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

}  // namespace oracle

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "afguide/envs/env.hpp"

namespace afguide::envs {

namespace {

// Waypoint for the U-maze: run along the bottom corridor, climb the right
// side, then head for the goal once above the wall.
void maze_target(const MazeLayout& m, double x, double y, double& tx, double& ty) {
  double wall_top = m.y_min;
  double wall_right = m.x_min;
  for (const Rect& r : m.wall_rects()) {
    wall_top = std::max(wall_top, r.y1);
    wall_right = std::max(wall_right, r.x1);
  }
  const double lane_x = 0.5 * (wall_right + m.x_max);
  if (m.walls.empty() || y > wall_top) {
    tx = m.goal_x;
    ty = m.goal_y;
  } else if (x >= wall_right + 0.3) {
    tx = lane_x;
    ty = m.goal_y - 0.5;
  } else {
    tx = lane_x;
    ty = m.start_region.y0 + 0.5 * (m.start_region.y1 - m.start_region.y0);
  }
}

}  // namespace

PolicyKind parse_policy_kind(std::string_view name) {
  if (name == "expert") return PolicyKind::kExpert;
  if (name == "medium") return PolicyKind::kMedium;
  if (name == "random") return PolicyKind::kRandom;
  throw std::invalid_argument("unknown policy kind '" + std::string(name) + "'");
}

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kExpert: return "expert";
    case PolicyKind::kMedium: return "medium";
    case PolicyKind::kRandom: return "random";
  }
  return "?";
}

ScriptedPolicy::ScriptedPolicy(const Environment& env, PolicyKind kind, std::uint64_t seed)
    : spec_(env.spec()), kind_(kind), rng_(mix_key(seed, 0xB0B1C7ull)) {
  if (const auto* maze = dynamic_cast<const PointMazeEnv*>(&env)) maze_ = maze->layout();
}

std::vector<double> ScriptedPolicy::expert_action(std::span<const double> s) const {
  if (maze_) {
    double tx = 0, ty = 0;
    maze_target(*maze_, s[0], s[1], tx, ty);
    return {std::clamp(kGain * (tx - s[0]) - kDamping * s[2], -1.0, 1.0),
            std::clamp(kGain * (ty - s[1]) - kDamping * s[3], -1.0, 1.0)};
  }
  // Corridor: the goal is unbounded, so the controller saturates.
  return {s[1] < 5.0 ? 1.0 : 0.0};
}

std::vector<double> ScriptedPolicy::act(std::span<const double> s) {
  if (static_cast<int>(s.size()) != spec_.state_dim) {
    throw std::invalid_argument("ScriptedPolicy::act: wrong state size");
  }
  std::vector<double> a(static_cast<std::size_t>(spec_.action_dim));
  switch (kind_) {
    case PolicyKind::kRandom:
      for (auto& v : a) v = rng_.uniform(spec_.action_low, spec_.action_high);
      return a;
    case PolicyKind::kExpert:
      return expert_action(s);
    case PolicyKind::kMedium: {
      if (rng_.bernoulli(kRandomFraction)) {
        for (auto& v : a) v = rng_.uniform(spec_.action_low, spec_.action_high);
        return a;
      }
      a = expert_action(s);
      for (auto& v : a) {
        v = std::clamp(v + rng_.normal(0.0, kNoiseStd), spec_.action_low, spec_.action_high);
      }
      return a;
    }
  }
  return a;
}

}  // namespace afguide::envs

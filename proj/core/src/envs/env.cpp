#include "afguide/envs/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace afguide::envs {

namespace {

void check_action(std::span<const double> action, int dim) {
  if (static_cast<int>(action.size()) != dim) {
    throw std::invalid_argument("step: expected action of size " + std::to_string(dim));
  }
  for (double a : action) {
    if (!std::isfinite(a)) throw std::invalid_argument("step: non-finite action");
  }
}

double clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

MazeLayout MazeLayout::u_maze() {
  MazeLayout m;
  m.walls.push_back({0.0, 2.5, 3.5, 2.5});
  return m;
}

std::vector<Rect> MazeLayout::wall_rects() const {
  std::vector<Rect> out;
  for (const auto& w : walls) {
    out.push_back({std::min(w.x0, w.x1) - half_thickness, std::min(w.y0, w.y1) - half_thickness,
                   std::max(w.x0, w.x1) + half_thickness, std::max(w.y0, w.y1) + half_thickness});
  }
  return out;
}

PointMazeEnv::PointMazeEnv(RewardKind kind, MazeLayout layout, PointPhysics physics)
    : layout_(std::move(layout)), physics_(physics), rects_(layout_.wall_rects()) {
  spec_.name = kind == RewardKind::kSparse ? "pointmaze-sparse" : "pointmaze-dense";
  spec_.state_dim = 4;
  spec_.action_dim = 2;
  spec_.max_episode_steps = 300;
  spec_.reward_kind = kind;
  spec_.has_goal = true;
}

std::vector<double> PointMazeEnv::reset(std::uint64_t seed) {
  Rng rng(mix_key(seed, 0x5EED'4D41'5A45ull));
  const Rect& r = layout_.start_region;
  x_ = rng.uniform(r.x0, r.x1);
  y_ = rng.uniform(r.y0, r.y1);
  vx_ = 0.0;
  vy_ = 0.0;
  steps_ = 0;
  return state();
}

void PointMazeEnv::set_state(std::span<const double> s) {
  if (s.size() != 4) throw std::invalid_argument("PointMazeEnv::set_state: expected 4 values");
  x_ = s[0];
  y_ = s[1];
  vx_ = s[2];
  vy_ = s[3];
}

double PointMazeEnv::goal_distance(double x, double y) const {
  return std::hypot(x - layout_.goal_x, y - layout_.goal_y);
}

// Axis sweep: stop at the first wall face crossed, zero the normal velocity.
void PointMazeEnv::move_x(double dx) {
  double target = x_ + dx;
  for (const Rect& r : rects_) {
    if (!(y_ > r.y0 && y_ < r.y1)) continue;
    if (dx > 0 && x_ <= r.x0 && target > r.x0) {
      target = r.x0;
      vx_ = 0.0;
    } else if (dx < 0 && x_ >= r.x1 && target < r.x1) {
      target = r.x1;
      vx_ = 0.0;
    }
  }
  if (target < layout_.x_min || target > layout_.x_max) {
    target = clip(target, layout_.x_min, layout_.x_max);
    vx_ = 0.0;
  }
  x_ = target;
}

void PointMazeEnv::move_y(double dy) {
  double target = y_ + dy;
  for (const Rect& r : rects_) {
    if (!(x_ > r.x0 && x_ < r.x1)) continue;
    if (dy > 0 && y_ <= r.y0 && target > r.y0) {
      target = r.y0;
      vy_ = 0.0;
    } else if (dy < 0 && y_ >= r.y1 && target < r.y1) {
      target = r.y1;
      vy_ = 0.0;
    }
  }
  if (target < layout_.y_min || target > layout_.y_max) {
    target = clip(target, layout_.y_min, layout_.y_max);
    vy_ = 0.0;
  }
  y_ = target;
}

StepResult PointMazeEnv::step(std::span<const double> action) {
  check_action(action, 2);
  const double ax = clip(action[0], spec_.action_low, spec_.action_high);
  const double ay = clip(action[1], spec_.action_low, spec_.action_high);
  vx_ = (1.0 - physics_.friction) * vx_ + physics_.dt * ax;
  vy_ = (1.0 - physics_.friction) * vy_ + physics_.dt * ay;
  const double speed = std::hypot(vx_, vy_);
  if (speed > physics_.v_max) {
    vx_ *= physics_.v_max / speed;
    vy_ *= physics_.v_max / speed;
  }
  move_x(physics_.dt * vx_);
  move_y(physics_.dt * vy_);
  ++steps_;

  StepResult out;
  out.state = state();
  const double dist = goal_distance(x_, y_);
  out.success = dist < layout_.goal_radius;
  if (spec_.reward_kind == RewardKind::kSparse) {
    out.reward = out.success ? 1.0 : 0.0;
    out.terminated = out.success;
  } else {
    out.reward = -dist;
  }
  out.truncated = !out.terminated && steps_ >= spec_.max_episode_steps;
  return out;
}

CorridorEnv::CorridorEnv(PointPhysics physics) : physics_(physics) {
  spec_.name = "corridor";
  spec_.state_dim = 2;
  spec_.action_dim = 1;
  spec_.max_episode_steps = 300;
  spec_.reward_kind = RewardKind::kDense;
  spec_.has_goal = false;
}

std::vector<double> CorridorEnv::reset(std::uint64_t seed) {
  Rng rng(mix_key(seed, 0x5EED'C022'1D02ull));
  x_ = rng.uniform(kStartMin, kStartMax);
  v_ = 0.0;
  steps_ = 0;
  return state();
}

void CorridorEnv::set_state(std::span<const double> s) {
  if (s.size() != 2) throw std::invalid_argument("CorridorEnv::set_state: expected 2 values");
  x_ = s[0];
  v_ = s[1];
}

StepResult CorridorEnv::step(std::span<const double> action) {
  check_action(action, 1);
  const double a = clip(action[0], spec_.action_low, spec_.action_high);
  v_ = clip((1.0 - physics_.friction) * v_ + physics_.dt * a, -physics_.v_max, physics_.v_max);
  double x = x_ + physics_.dt * v_;
  if (x < kXMin || x > kXMax) {
    x = clip(x, kXMin, kXMax);
    v_ = 0.0;
  }
  x_ = x;
  ++steps_;
  StepResult out;
  out.state = state();
  out.reward = v_;
  out.truncated = steps_ >= spec_.max_episode_steps;
  return out;
}

std::unique_ptr<Environment> make_env(std::string_view name) {
  if (name == "pointmaze-sparse") return std::make_unique<PointMazeEnv>(RewardKind::kSparse);
  if (name == "pointmaze-dense") return std::make_unique<PointMazeEnv>(RewardKind::kDense);
  if (name == "corridor") return std::make_unique<CorridorEnv>();
  throw std::invalid_argument("unknown environment '" + std::string(name) + "'");
}

std::vector<std::string> env_names() { return {"pointmaze-sparse", "pointmaze-dense", "corridor"}; }

}  // namespace afguide::envs

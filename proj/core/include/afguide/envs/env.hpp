#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "afguide/rng.hpp"

namespace afguide::envs {

enum class RewardKind { kSparse, kDense };

struct EnvSpec {
  std::string name;
  int state_dim = 1;
  int action_dim = 1;
  double action_low = -1.0;
  double action_high = 1.0;
  int max_episode_steps = 300;
  RewardKind reward_kind = RewardKind::kDense;
  bool has_goal = false;
};

struct StepResult {
  std::vector<double> state;
  double reward = 0.0;
  // Reached an absorbing state (goal entry). Bootstrapping stops here.
  bool terminated = false;
  // Hit the step limit. Not absorbing.
  bool truncated = false;
  bool success = false;

  bool done() const { return terminated || truncated; }
};

/// A deterministic continuous-control task. One instance is
/// single-threaded; independent instances share nothing.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvSpec& spec() const = 0;
  /// Samples a start state from the start region with a generator keyed
  /// only on `seed`; velocities are zero.
  virtual std::vector<double> reset(std::uint64_t seed) = 0;
  /// Clips the action to the bounds. Throws std::invalid_argument on a
  /// non-finite or wrongly sized action.
  virtual StepResult step(std::span<const double> action) = 0;

  virtual std::vector<double> state() const = 0;
  virtual void set_state(std::span<const double> state) = 0;
  virtual int elapsed_steps() const = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;
};

/// Physics constants shared by the toy tasks.
struct PointPhysics {
  double dt = 0.1;
  double friction = 0.05;
  double v_max = 5.0;
};

/// Axis-aligned wall segment. Collision treats it as the rectangle obtained
/// by inflating the segment by `half_thickness` on every side.
struct WallSegment {
  double x0, y0, x1, y1;
};

struct Rect {
  double x0, y0, x1, y1;
  bool strictly_contains(double x, double y) const {
    return x > x0 && x < x1 && y > y0 && y < y1;
  }
};

struct MazeLayout {
  double x_min = 0.0, y_min = 0.0, x_max = 5.0, y_max = 5.0;
  std::vector<WallSegment> walls;
  double half_thickness = 0.1;
  double goal_x = 1.0, goal_y = 4.0, goal_radius = 0.5;
  Rect start_region{0.5, 0.5, 1.5, 1.5};

  /// U-shaped maze: a wall from the left edge separates the start
  /// (bottom-left) from the goal (top-left); the opening is on the right.
  static MazeLayout u_maze();
  std::vector<Rect> wall_rects() const;
};

class PointMazeEnv final : public Environment {
 public:
  PointMazeEnv(RewardKind kind, MazeLayout layout = MazeLayout::u_maze(),
               PointPhysics physics = {});

  const EnvSpec& spec() const override { return spec_; }
  std::vector<double> reset(std::uint64_t seed) override;
  StepResult step(std::span<const double> action) override;
  std::vector<double> state() const override { return {x_, y_, vx_, vy_}; }
  void set_state(std::span<const double> state) override;
  int elapsed_steps() const override { return steps_; }
  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<PointMazeEnv>(*this);
  }

  const MazeLayout& layout() const { return layout_; }
  const PointPhysics& physics() const { return physics_; }
  double goal_distance(double x, double y) const;

 private:
  void move_x(double dx);
  void move_y(double dy);

  EnvSpec spec_;
  MazeLayout layout_;
  PointPhysics physics_;
  std::vector<Rect> rects_;
  double x_ = 0, y_ = 0, vx_ = 0, vy_ = 0;
  int steps_ = 0;
};

/// 1-D track; reward is the forward velocity after the step.
class CorridorEnv final : public Environment {
 public:
  explicit CorridorEnv(PointPhysics physics = {});

  const EnvSpec& spec() const override { return spec_; }
  std::vector<double> reset(std::uint64_t seed) override;
  StepResult step(std::span<const double> action) override;
  std::vector<double> state() const override { return {x_, v_}; }
  void set_state(std::span<const double> state) override;
  int elapsed_steps() const override { return steps_; }
  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<CorridorEnv>(*this);
  }

  static constexpr double kXMin = -100.0;
  static constexpr double kXMax = 100.0;
  static constexpr double kStartMin = 0.0;
  static constexpr double kStartMax = 1.0;

  const PointPhysics& physics() const { return physics_; }

 private:
  EnvSpec spec_;
  PointPhysics physics_;
  double x_ = 0, v_ = 0;
  int steps_ = 0;
};

/// "pointmaze-sparse", "pointmaze-dense" or "corridor".
std::unique_ptr<Environment> make_env(std::string_view name);
std::vector<std::string> env_names();

enum class PolicyKind { kExpert, kMedium, kRandom };

PolicyKind parse_policy_kind(std::string_view name);
std::string_view to_string(PolicyKind kind);

/// Scripted behavior controllers used to produce offline data.
///  expert: proportional controller (gain 1) toward the goal; in the maze the
///          goal is reached through waypoints, with velocity damping.
///  medium: expert plus N(0, 0.5^2) action noise, 20% uniform-random steps.
///  random: uniform actions.
class ScriptedPolicy {
 public:
  ScriptedPolicy(const Environment& env, PolicyKind kind, std::uint64_t seed);

  std::vector<double> act(std::span<const double> state);
  /// The noiseless expert action for `state`.
  std::vector<double> expert_action(std::span<const double> state) const;

  static constexpr double kGain = 1.0;
  static constexpr double kDamping = 1.0;
  static constexpr double kNoiseStd = 0.5;
  static constexpr double kRandomFraction = 0.2;

 private:
  EnvSpec spec_;
  PolicyKind kind_;
  Rng rng_;
  std::optional<MazeLayout> maze_;
};

}  // namespace afguide::envs

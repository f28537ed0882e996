#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "afguide/afdt/planner.hpp"
#include "afguide/envs/env.hpp"
#include "afguide/sac/replay.hpp"

namespace afguide::sac {

/// A frozen state planner and the per-dimension divisors of the guiding
/// reward.
struct Planner {
  afdt::AfdtModel<float> model;
  std::vector<double> divisors;
};

struct EvalResult {
  double mean_return = 0.0;
  double success_rate = 0.0;
  std::vector<double> returns;
  std::vector<std::uint8_t> successes;
};

/// Deterministic-policy episodes on `env`; episode i resets with a seed
/// derived from (seed, i).
template <typename T>
EvalResult evaluate_policy(GuidedSacAgent<T>& agent, envs::Environment& env, int episodes,
                           std::uint64_t seed);

/// One row of the learning-curve CSV.
struct CurveRow {
  std::int64_t step = 0;
  std::int64_t episode = 0;
  double eval_return = 0.0;
  double success_rate = 0.0;
  double loss_qe = 0.0;
  double loss_qg = 0.0;
  double loss_pi = 0.0;
  double alpha = 0.0;
  double mean_rg = 0.0;
};

inline constexpr const char* kCurveHeader =
    "step,episode,eval_return,success_rate,loss_qe,loss_qg,loss_pi,alpha,mean_rg";

std::string curve_csv(const std::vector<CurveRow>& rows);

/// Online loop: plan the next state, act, step the environment, score the
/// step against the plan, update the return-to-go, store the transition,
/// then take gradient steps once warmup is over.
class GuidedTrainer {
 public:
  GuidedTrainer(std::unique_ptr<envs::Environment> env, const GuidedSacConfig& config,
                std::optional<Planner> planner, double initial_rtg, std::uint64_t seed);

  /// One environment step (Algo-style collection); resets on episode end.
  Transition collect_step();
  /// Runs until `total_steps` environment steps have been collected.
  std::vector<CurveRow> run(std::int64_t total_steps);
  EvalResult evaluate(int episodes);

  GuidedSacAgent<float>& agent() { return agent_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const afdt::PlannerContext* context() const { return ctx_ ? &*ctx_ : nullptr; }
  std::int64_t env_steps() const { return env_steps_; }
  std::int64_t episodes() const { return episodes_; }
  std::int64_t gradient_updates() const { return updates_; }
  std::int64_t aborted_updates() const { return aborted_; }
  std::int64_t planner_incidents() const { return planner_incidents_; }

 private:
  void start_episode();

  std::unique_ptr<envs::Environment> env_;
  std::unique_ptr<envs::Environment> eval_env_;
  GuidedSacConfig config_;
  GuidedSacAgent<float> agent_;
  std::optional<Planner> planner_;
  std::optional<afdt::PlannerContext> ctx_;
  ReplayBuffer buffer_;
  double initial_rtg_;
  std::uint64_t seed_;
  Rng action_rng_;
  Rng replay_rng_;
  Rng update_rng_;
  std::vector<double> state_;
  std::int64_t env_steps_ = 0;
  std::int64_t episodes_ = 0;
  std::int64_t updates_ = 0;
  std::int64_t aborted_ = 0;
  std::int64_t planner_incidents_ = 0;

  // running sums since the last curve row
  double sum_qe_ = 0, sum_qg_ = 0, sum_pi_ = 0, sum_rg_ = 0;
  std::int64_t n_updates_window_ = 0, n_steps_window_ = 0;
};

/// Agent weights (AFGC) plus `path + ".json"` with dims and config.
void save_agent(const std::string& path, GuidedSacAgent<float>& agent, const std::string& env_name);
struct LoadedAgent {
  std::unique_ptr<GuidedSacAgent<float>> agent;
  std::string env_name;
};
LoadedAgent load_agent(const std::string& path);

}  // namespace afguide::sac

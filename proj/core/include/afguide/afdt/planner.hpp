#pragma once

#include <deque>
#include <span>
#include <vector>

#include "afguide/afdt/model.hpp"

namespace afguide::afdt {

/// Rolling window of the last K states, returns-to-go and timesteps seen
/// during one online episode.
class PlannerContext {
 public:
  PlannerContext(int context_len, int state_dim);

  /// Starts an episode at s_0 with the desired initial return-to-go.
  void reset(std::span<const double> s0, double initial_rtg);
  /// Appends s_{t+1}; its return-to-go is the current one minus `reward`.
  void update(std::span<const double> next_state, double reward);

  bool empty() const { return states_.empty(); }
  std::size_t size() const { return states_.size(); }
  int context_len() const { return context_len_; }
  int state_dim() const { return state_dim_; }
  double current_rtg() const { return rtg_; }
  int current_timestep() const { return t_; }

  const std::deque<std::vector<double>>& states() const { return states_; }
  const std::deque<double>& rtgs() const { return rtgs_; }
  const std::deque<int>& timesteps() const { return timesteps_; }

  /// The buffered steps as a left-padded window of length K.
  data::Window window() const;

 private:
  void push(std::span<const double> s);

  int context_len_;
  int state_dim_;
  std::deque<std::vector<double>> states_;
  std::deque<double> rtgs_;
  std::deque<int> timesteps_;
  double rtg_ = 0.0;
  int t_ = 0;
};

/// Planned next state for the newest step of the context. The model's
/// forward caches are overwritten, so each rollout worker needs its own
/// model instance.
template <typename T>
std::vector<double> plan_next_state(AfdtModel<T>& model, const PlannerContext& ctx);

extern template std::vector<double> plan_next_state(AfdtModel<float>&, const PlannerContext&);
extern template std::vector<double> plan_next_state(AfdtModel<double>&, const PlannerContext&);

}  // namespace afguide::afdt

#include "afguide/afdt/planner.hpp"

#include <stdexcept>

namespace afguide::afdt {

PlannerContext::PlannerContext(int context_len, int state_dim)
    : context_len_(context_len), state_dim_(state_dim) {
  if (context_len < 1 || state_dim < 1) {
    throw std::invalid_argument("PlannerContext: context length and state dim must be >= 1");
  }
}

void PlannerContext::reset(std::span<const double> s0, double initial_rtg) {
  states_.clear();
  rtgs_.clear();
  timesteps_.clear();
  rtg_ = initial_rtg;
  t_ = 0;
  push(s0);
}

void PlannerContext::update(std::span<const double> next_state, double reward) {
  if (empty()) throw std::logic_error("PlannerContext::update before reset");
  rtg_ -= reward;
  ++t_;
  push(next_state);
}

void PlannerContext::push(std::span<const double> s) {
  if (static_cast<int>(s.size()) != state_dim_) {
    throw std::invalid_argument("PlannerContext: wrong state size");
  }
  states_.emplace_back(s.begin(), s.end());
  rtgs_.push_back(rtg_);
  timesteps_.push_back(t_);
  while (static_cast<int>(states_.size()) > context_len_) {
    states_.pop_front();
    rtgs_.pop_front();
    timesteps_.pop_front();
  }
}

data::Window PlannerContext::window() const {
  const auto K = static_cast<std::size_t>(context_len_);
  const auto d = static_cast<std::size_t>(state_dim_);
  data::Window w;
  w.context_len = context_len_;
  w.state_dim = state_dim_;
  w.states.assign(K * d, 0.0);
  w.next_states.assign(K * d, 0.0);
  w.rtgs.assign(K, 0.0);
  w.timesteps.assign(K, 0);
  w.valid.assign(K, 0);
  w.has_target.assign(K, 0);
  const std::size_t pad = K - states_.size();
  for (std::size_t i = 0; i < states_.size(); ++i) {
    const std::size_t k = pad + i;
    w.valid[k] = 1;
    w.rtgs[k] = rtgs_[i];
    w.timesteps[k] = timesteps_[i];
    std::copy(states_[i].begin(), states_[i].end(),
              w.states.begin() + static_cast<std::ptrdiff_t>(k * d));
  }
  w.end_index = static_cast<std::size_t>(t_);
  return w;
}

template <typename T>
std::vector<double> plan_next_state(AfdtModel<T>& model, const PlannerContext& ctx) {
  if (ctx.empty()) throw std::invalid_argument("plan_next_state: empty context");
  if (ctx.context_len() != model.arch().context_len || ctx.state_dim() != model.arch().state_dim) {
    throw std::invalid_argument("plan_next_state: context does not match the model");
  }
  const auto batch = AfdtBatch<T>::from_windows({ctx.window()});
  const nn::Matrix<T> next = model.forward(batch);
  const auto last = next.rows() - 1;
  std::vector<double> out(static_cast<std::size_t>(next.cols()));
  for (Eigen::Index i = 0; i < next.cols(); ++i) {
    out[static_cast<std::size_t>(i)] = static_cast<double>(next(last, i));
  }
  return out;
}

template std::vector<double> plan_next_state(AfdtModel<float>&, const PlannerContext&);
template std::vector<double> plan_next_state(AfdtModel<double>&, const PlannerContext&);

}  // namespace afguide::afdt

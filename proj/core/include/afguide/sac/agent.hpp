#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "afguide/nn/checkpoint.hpp"
#include "afguide/nn/mlp.hpp"
#include "afguide/nn/optimizer.hpp"
#include "afguide/sac/policy.hpp"

namespace afguide::sac {

/// guided: env critics + zero-discount guiding critic, combined in the
/// actor loss. sac: no guidance. reward_mix: beta * r_g is added to the
/// environment reward of a single discounted critic pathway.
/// imitation_guided: guided, with a planner trained without RTG input.
enum class AgentMode { kGuided, kSac, kRewardMix, kImitationGuided };

AgentMode parse_agent_mode(std::string_view name);  // accepts '-' or '_'
std::string_view to_string(AgentMode mode);
bool uses_planner(AgentMode mode);
bool uses_guide_critic(AgentMode mode);

struct GuidedSacConfig {
  AgentMode mode = AgentMode::kGuided;
  double gamma = 0.99;
  double beta = 3.0;
  int batch = 256;
  double lr = 3e-4;
  double tau = 0.005;
  std::int64_t buffer_capacity = 1'000'000;
  int warmup_steps = 1000;
  int gradient_steps = 1;
  bool auto_entropy = true;
  double initial_alpha = 1.0;
  /// NaN selects -action_dim.
  double target_entropy = std::numeric_limits<double>::quiet_NaN();
  int hidden_dim = 256;
  int n_hidden_layers = 2;
  int eval_interval = 1000;
  int eval_episodes = 10;

  void validate() const;
  bool operator==(const GuidedSacConfig& o) const;
};

class UpdateAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Columns: s (n x S), a (n x A), r_e, r_g, terminated (n x 1), s2 (n x S).
template <typename T>
struct TransitionBatch {
  nn::Matrix<T> s;
  nn::Matrix<T> a;
  nn::Matrix<T> r_e;
  nn::Matrix<T> r_g;
  nn::Matrix<T> terminated;
  nn::Matrix<T> s2;

  Eigen::Index size() const { return s.rows(); }
};

struct ActorLossParts {
  double loss = 0.0;
  double mean_log_prob = 0.0;
};

template <typename T>
class GuidedSacAgent {
 public:
  GuidedSacAgent(int state_dim, int action_dim, const GuidedSacConfig& config, std::uint64_t seed);

  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  const GuidedSacConfig& config() const { return config_; }
  void set_beta(double beta) { config_.beta = beta; }
  double alpha() const { return std::exp(static_cast<double>(log_alpha_.value(0, 0))); }
  double target_entropy() const { return target_entropy_; }

  /// Single-state action. Deterministic mode returns tanh(mean).
  std::vector<double> act(std::span<const double> state, bool deterministic, Rng& rng);
  std::int64_t incidents() const { return incidents_; }

  /// Bellman targets y = r + gamma (1 - terminated) [min Q_tgt(s', a') -
  /// alpha log pi(a'|s')] with a' drawn with `next_noise`. In reward_mix
  /// mode r = r_e + beta r_g, otherwise r = r_e.
  nn::Matrix<T> critic_targets(const TransitionBatch<T>& batch, const nn::Matrix<T>& next_noise);
  /// 0.5 * (MSE(Q1, y) + MSE(Q2, y)); accumulates critic gradients when asked.
  double critic_env_loss(const TransitionBatch<T>& batch, const nn::Matrix<T>& y, bool accumulate);
  /// Target, loss, Adam step, then polyak averaging of the target critics.
  double critic_update_env(const TransitionBatch<T>& batch, const nn::Matrix<T>& next_noise);

  /// 0.5 * MSE(Q_g(s, a), r_g): the stored guiding reward is the target.
  double guide_loss(const TransitionBatch<T>& batch, bool accumulate);
  double critic_update_guide(const TransitionBatch<T>& batch);

  /// mean[alpha log pi(a|s) - (min(Q1, Q2)(s, a) + beta Q_g(s, a))] with
  /// a = tanh(mu + sigma * noise); accumulates actor gradients when asked.
  ActorLossParts actor_loss(const TransitionBatch<T>& batch, const nn::Matrix<T>& noise,
                            bool accumulate);
  /// Actor step, then temperature step toward the target entropy.
  /// Returns (loss_pi, loss_alpha).
  std::pair<double, double> actor_and_temperature_update(const TransitionBatch<T>& batch,
                                                         const nn::Matrix<T>& noise);

  struct UpdateStats {
    double loss_qe = 0.0;
    double loss_qg = 0.0;
    double loss_pi = 0.0;
    double loss_alpha = 0.0;
  };
  /// One full gradient step in the order: env critics (+ polyak), guide
  /// critic (when the mode has one), actor and temperature.
  UpdateStats update(const TransitionBatch<T>& batch, Rng& rng);

  nn::Mlp<T>& actor() { return actor_; }
  nn::Mlp<T>& q1() { return q1_; }
  nn::Mlp<T>& q2() { return q2_; }
  nn::Mlp<T>& q1_target() { return q1_tgt_; }
  nn::Mlp<T>& q2_target() { return q2_tgt_; }
  nn::Mlp<T>& q_guide() { return qg_; }
  nn::Param<T>& log_alpha() { return log_alpha_; }
  nn::ParamList<T> critic_params();
  nn::ParamList<T> all_params();

  std::vector<nn::NamedTensor> export_tensors();
  void import_tensors(const std::vector<nn::NamedTensor>& tensors);

 private:
  nn::Matrix<T> concat(const nn::Matrix<T>& s, const nn::Matrix<T>& a) const;

  int state_dim_;
  int action_dim_;
  GuidedSacConfig config_;
  double target_entropy_;
  nn::Mlp<T> actor_;
  nn::Mlp<T> q1_, q2_, q1_tgt_, q2_tgt_, qg_;
  nn::Param<T> log_alpha_;
  nn::Adam<T> actor_opt_, critic_opt_, guide_opt_, alpha_opt_;
  std::int64_t incidents_ = 0;
};

template <typename T>
nn::Matrix<T> standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  nn::Matrix<T> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(rng.normal());
  return m;
}

extern template class GuidedSacAgent<float>;
extern template class GuidedSacAgent<double>;

}  // namespace afguide::sac

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "afguide/dataset/dataset.hpp"
#include "afguide/nn/layers.hpp"
#include "afguide/nn/transformer.hpp"

namespace afguide::afdt {

/// udrl: return-conditioned planner. imitation: RTG inputs are replaced by
/// a constant zero, so the model regresses next states from past states.
enum class PlannerMode { kUdrl, kImitation };

PlannerMode parse_planner_mode(std::string_view name);
std::string_view to_string(PlannerMode mode);

struct AfdtArch {
  int state_dim = 1;
  int context_len = 20;
  int max_timestep = 300;  // embedding table has max_timestep + 1 rows
  nn::TransformerSpec trunk{};
  double rtg_scale = 1.0;
  PlannerMode mode = PlannerMode::kUdrl;

  void validate() const;
  bool operator==(const AfdtArch&) const = default;
};

/// Model inputs for B windows of K steps; row b * K + k is step k of
/// window b (k = K - 1 is the newest).
template <typename T>
struct AfdtBatch {
  int batch = 0;
  int context_len = 0;
  int state_dim = 0;
  nn::Matrix<T> states;        // (B*K) x state_dim
  nn::Matrix<T> rtgs;          // (B*K) x 1, unscaled
  std::vector<int> timesteps;  // B*K
  std::vector<std::uint8_t> valid;
  nn::Matrix<T> target_delta;  // (B*K) x state_dim, s_{t+1} - s_t
  std::vector<std::uint8_t> has_target;

  static AfdtBatch from_windows(const std::vector<data::Window>& windows);
  int rows() const { return batch * context_len; }
};

/// Action-free decision transformer. Tokens are interleaved per step as
/// (state, return-to-go); both tokens of step t get the timestep embedding
/// of t, then a layer norm, then the causal trunk. The state change for
/// step t is decoded from the trunk output at the RTG token of step t and
/// added back to s_t.
template <typename T>
class AfdtModel {
 public:
  explicit AfdtModel(const AfdtArch& arch);

  void init(Rng& rng);
  const AfdtArch& arch() const { return arch_; }

  /// Returns predicted next states, (B*K) x state_dim. Caches activations
  /// for backward(). `train` enables dropout driven by `rng`.
  nn::Matrix<T> forward(const AfdtBatch<T>& batch, bool train = false, Rng* rng = nullptr);
  /// Raw head output (predicted state change) of the last forward().
  const nn::Matrix<T>& last_delta() const { return delta_; }

  /// Backpropagates d(loss)/d(delta) through the last forward().
  void backward(const nn::Matrix<T>& d_delta);

  nn::ParamList<T> params();

  nn::Linear<T>& predict_head() { return predict_; }
  nn::Linear<T>& embed_state() { return embed_state_; }
  nn::Linear<T>& embed_rtg() { return embed_rtg_; }
  nn::Param<T>& embed_time() { return embed_time_; }

 private:
  AfdtArch arch_;
  nn::Linear<T> embed_state_;
  nn::Linear<T> embed_rtg_;
  nn::Param<T> embed_time_;
  nn::LayerNorm<T> embed_ln_;
  nn::Transformer<T> trunk_;
  nn::Linear<T> predict_;

  // forward caches
  const AfdtBatch<T>* batch_ = nullptr;
  nn::Matrix<T> rtg_in_;
  nn::Matrix<T> rtg_tokens_head_;  // trunk output at RTG tokens, (B*K) x D
  nn::Matrix<T> delta_;
};

extern template class AfdtModel<float>;
extern template class AfdtModel<double>;
extern template struct AfdtBatch<float>;
extern template struct AfdtBatch<double>;

}  // namespace afguide::afdt

#include "afguide/afdt/model.hpp"

#include <stdexcept>

namespace afguide::afdt {

PlannerMode parse_planner_mode(std::string_view name) {
  if (name == "udrl") return PlannerMode::kUdrl;
  if (name == "imitation") return PlannerMode::kImitation;
  throw std::invalid_argument("unknown planner mode '" + std::string(name) + "'");
}

std::string_view to_string(PlannerMode mode) {
  return mode == PlannerMode::kUdrl ? "udrl" : "imitation";
}

void AfdtArch::validate() const {
  if (state_dim < 1) throw std::invalid_argument("AfdtArch: state_dim must be >= 1");
  if (context_len < 1) throw std::invalid_argument("AfdtArch: context_len must be >= 1");
  if (max_timestep < 0) throw std::invalid_argument("AfdtArch: max_timestep must be >= 0");
  if (!(rtg_scale > 0.0)) throw std::invalid_argument("AfdtArch: rtg_scale must be > 0");
  trunk.validate();
  if (trunk.max_tokens < 2 * context_len) {
    throw std::invalid_argument("AfdtArch: trunk max_tokens must be >= 2 * context_len");
  }
}

template <typename T>
AfdtBatch<T> AfdtBatch<T>::from_windows(const std::vector<data::Window>& windows) {
  if (windows.empty()) throw std::invalid_argument("AfdtBatch: no windows");
  AfdtBatch<T> b;
  b.batch = static_cast<int>(windows.size());
  b.context_len = windows.front().context_len;
  b.state_dim = windows.front().state_dim;
  const int K = b.context_len;
  const int d = b.state_dim;
  b.states.resize(b.rows(), d);
  b.rtgs.resize(b.rows(), 1);
  b.target_delta = nn::Matrix<T>::Zero(b.rows(), d);
  b.timesteps.resize(static_cast<std::size_t>(b.rows()));
  b.valid.resize(static_cast<std::size_t>(b.rows()));
  b.has_target.resize(static_cast<std::size_t>(b.rows()));
  for (int w = 0; w < b.batch; ++w) {
    const auto& win = windows[static_cast<std::size_t>(w)];
    if (win.context_len != K || win.state_dim != d) {
      throw std::invalid_argument("AfdtBatch: windows have inconsistent shapes");
    }
    for (int k = 0; k < K; ++k) {
      const int row = w * K + k;
      const auto uk = static_cast<std::size_t>(k);
      for (int i = 0; i < d; ++i) {
        const auto at = uk * static_cast<std::size_t>(d) + static_cast<std::size_t>(i);
        b.states(row, i) = static_cast<T>(win.states[at]);
        if (win.has_target[uk]) {
          b.target_delta(row, i) = static_cast<T>(win.next_states[at] - win.states[at]);
        }
      }
      b.rtgs(row, 0) = static_cast<T>(win.rtgs[uk]);
      b.timesteps[static_cast<std::size_t>(row)] = win.timesteps[uk];
      b.valid[static_cast<std::size_t>(row)] = win.valid[uk];
      b.has_target[static_cast<std::size_t>(row)] = win.valid[uk] && win.has_target[uk];
    }
  }
  return b;
}

template <typename T>
AfdtModel<T>::AfdtModel(const AfdtArch& arch)
    : arch_(arch),
      embed_state_("afdt.embed_state", arch.state_dim, arch.trunk.d_embed),
      embed_rtg_("afdt.embed_rtg", 1, arch.trunk.d_embed),
      embed_time_("afdt.embed_time", {static_cast<std::uint32_t>(arch.max_timestep + 1),
                                      static_cast<std::uint32_t>(arch.trunk.d_embed)}),
      embed_ln_("afdt.embed_ln", arch.trunk.d_embed),
      trunk_("afdt.trunk", arch.trunk),
      predict_("afdt.predict_state", arch.trunk.d_embed, arch.state_dim) {
  arch.validate();
}

template <typename T>
void AfdtModel<T>::init(Rng& rng) {
  for (nn::Linear<T>* l : {&embed_state_, &embed_rtg_, &predict_}) {
    nn::init_trunc_normal(l->weight, 0.02, rng);
    l->bias.value.setZero();
  }
  nn::init_trunc_normal(embed_time_, 0.02, rng);
  trunk_.init(rng);
}

template <typename T>
nn::Matrix<T> AfdtModel<T>::forward(const AfdtBatch<T>& batch, bool train, Rng* rng) {
  if (batch.state_dim != arch_.state_dim || batch.context_len > arch_.context_len ||
      batch.states.rows() != batch.rows() || batch.rtgs.rows() != batch.rows()) {
    throw std::invalid_argument("AfdtModel::forward: batch shape does not match the model");
  }
  for (int t : batch.timesteps) {
    if (t < 0 || t > arch_.max_timestep) {
      throw std::out_of_range("AfdtModel::forward: timestep " + std::to_string(t) +
                              " outside [0, " + std::to_string(arch_.max_timestep) + "]");
    }
  }
  batch_ = &batch;
  const int K = batch.context_len;
  const int D = arch_.trunk.d_embed;
  const int rows = batch.rows();

  if (arch_.mode == PlannerMode::kImitation) {
    rtg_in_ = nn::Matrix<T>::Zero(rows, 1);
  } else {
    rtg_in_ = batch.rtgs / static_cast<T>(arch_.rtg_scale);
  }
  nn::Matrix<T> state_emb;
  nn::Matrix<T> rtg_emb;
  embed_state_.forward(batch.states, state_emb);
  embed_rtg_.forward(rtg_in_, rtg_emb);

  nn::Matrix<T> tokens(2 * rows, D);
  nn::TokenLayout layout{batch.batch, 2 * K, std::vector<std::uint8_t>(2 * static_cast<std::size_t>(rows))};
  for (int r = 0; r < rows; ++r) {
    const auto time_row = embed_time_.value.row(batch.timesteps[static_cast<std::size_t>(r)]);
    tokens.row(2 * r) = state_emb.row(r) + time_row;
    tokens.row(2 * r + 1) = rtg_emb.row(r) + time_row;
    const auto v = batch.valid[static_cast<std::size_t>(r)];
    layout.valid[2 * static_cast<std::size_t>(r)] = v;
    layout.valid[2 * static_cast<std::size_t>(r) + 1] = v;
  }
  nn::Matrix<T> normed;
  embed_ln_.forward(tokens, normed);
  const nn::Matrix<T> out = trunk_.forward(normed, layout, train, rng);

  rtg_tokens_head_.resize(rows, D);
  for (int r = 0; r < rows; ++r) rtg_tokens_head_.row(r) = out.row(2 * r + 1);
  predict_.forward(rtg_tokens_head_, delta_);
  return batch.states + delta_;
}

template <typename T>
void AfdtModel<T>::backward(const nn::Matrix<T>& d_delta) {
  if (batch_ == nullptr) throw std::logic_error("AfdtModel::backward called without forward");
  const AfdtBatch<T>& batch = *batch_;
  const int rows = batch.rows();
  const int D = arch_.trunk.d_embed;

  nn::Matrix<T> d_head;
  predict_.backward(rtg_tokens_head_, d_delta, &d_head);
  nn::Matrix<T> d_out = nn::Matrix<T>::Zero(2 * rows, D);
  for (int r = 0; r < rows; ++r) d_out.row(2 * r + 1) = d_head.row(r);
  const nn::Matrix<T> d_normed = trunk_.backward(d_out);
  nn::Matrix<T> d_tokens;
  embed_ln_.backward(d_normed, d_tokens);

  nn::Matrix<T> d_state_emb(rows, D);
  nn::Matrix<T> d_rtg_emb(rows, D);
  for (int r = 0; r < rows; ++r) {
    d_state_emb.row(r) = d_tokens.row(2 * r);
    d_rtg_emb.row(r) = d_tokens.row(2 * r + 1);
    embed_time_.grad.row(batch.timesteps[static_cast<std::size_t>(r)]) +=
        d_tokens.row(2 * r) + d_tokens.row(2 * r + 1);
  }
  embed_state_.backward(batch.states, d_state_emb, nullptr);
  embed_rtg_.backward(rtg_in_, d_rtg_emb, nullptr);
}

template <typename T>
nn::ParamList<T> AfdtModel<T>::params() {
  nn::ParamList<T> out;
  embed_state_.collect(out);
  embed_rtg_.collect(out);
  out.push_back(&embed_time_);
  embed_ln_.collect(out);
  trunk_.collect(out);
  predict_.collect(out);
  return out;
}

template class AfdtModel<float>;
template class AfdtModel<double>;
template struct AfdtBatch<float>;
template struct AfdtBatch<double>;

}  // namespace afguide::afdt

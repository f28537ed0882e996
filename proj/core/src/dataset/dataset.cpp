#include "afguide/dataset/dataset.hpp"

#include <algorithm>
#include <cmath>

namespace afguide::data {

namespace {

template <typename R>
std::vector<double> suffix_sums(std::span<const R> rewards) {
  std::vector<double> out(rewards.size());
  double acc = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    acc += static_cast<double>(rewards[t]);
    out[t] = acc;
  }
  return out;
}

}  // namespace

std::vector<double> compute_rtg(std::span<const float> rewards) { return suffix_sums(rewards); }
std::vector<double> compute_rtg(std::span<const double> rewards) { return suffix_sums(rewards); }

NormStats compute_state_std(std::span<const Trajectory> trajectories, int state_dim) {
  const auto dim = static_cast<std::size_t>(state_dim);
  // Welford accumulation per dimension.
  std::vector<double> mean(dim, 0.0);
  std::vector<double> m2(dim, 0.0);
  std::size_t n = 0;
  for (const auto& traj : trajectories) {
    for (std::size_t t = 0; t < traj.length(); ++t) {
      ++n;
      const auto s = traj.state(t, state_dim);
      for (std::size_t i = 0; i < dim; ++i) {
        const double x = s[i];
        const double delta = x - mean[i];
        mean[i] += delta / static_cast<double>(n);
        m2[i] += delta * (x - mean[i]);
      }
    }
  }
  if (n < 2) throw std::invalid_argument("compute_state_std: need at least two states");
  NormStats stats;
  stats.mean = mean;
  stats.sigma.resize(dim);
  stats.flagged.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    stats.sigma[i] = std::sqrt(std::max(0.0, m2[i] / static_cast<double>(n)));
    stats.flagged[i] = stats.sigma[i] < NormStats::kDegenerateSigma ? 1 : 0;
  }
  return stats;
}

ActionFreeDataset::ActionFreeDataset(int state_dim, std::vector<Trajectory> trajectories)
    : state_dim_(state_dim), trajectories_(std::move(trajectories)) {
  if (state_dim_ < 1) throw std::invalid_argument("ActionFreeDataset: state_dim must be >= 1");
  if (trajectories_.empty()) throw std::invalid_argument("ActionFreeDataset: no trajectories");
  for (std::size_t i = 0; i < trajectories_.size(); ++i) {
    const auto& t = trajectories_[i];
    const std::string where = "trajectory " + std::to_string(i);
    if (t.states.size() != t.rewards.size() * static_cast<std::size_t>(state_dim_)) {
      throw std::invalid_argument("ActionFreeDataset: " + where + " has mismatched lengths");
    }
    if (t.length() < 2) {
      throw std::invalid_argument("ActionFreeDataset: " + where + " is shorter than 2 steps");
    }
    const auto finite = [](float v) { return std::isfinite(v); };
    if (!std::all_of(t.states.begin(), t.states.end(), finite) ||
        !std::all_of(t.rewards.begin(), t.rewards.end(), finite)) {
      throw std::invalid_argument("ActionFreeDataset: " + where + " has non-finite values");
    }
    rtg_.push_back(compute_rtg(std::span<const float>(t.rewards)));
    total_steps_ += t.length();
  }
  stats_ = compute_state_std(trajectories_, state_dim_);
}

int Window::valid_count() const {
  return static_cast<int>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

Window make_window(const ActionFreeDataset& dataset, std::size_t trajectory,
                   std::size_t end_index, int context_len) {
  const auto& traj = dataset.trajectory(trajectory);
  if (end_index >= traj.length()) throw std::out_of_range("make_window: end index out of range");
  const int dim = dataset.state_dim();
  const auto K = static_cast<std::size_t>(context_len);
  const auto d = static_cast<std::size_t>(dim);
  Window w;
  w.context_len = context_len;
  w.state_dim = dim;
  w.states.assign(K * d, 0.0);
  w.next_states.assign(K * d, 0.0);
  w.rtgs.assign(K, 0.0);
  w.timesteps.assign(K, 0);
  w.valid.assign(K, 0);
  w.has_target.assign(K, 0);
  w.trajectory = trajectory;
  w.end_index = end_index;
  const auto& rtg = dataset.rtg(trajectory);
  // Slot k (0-based, K-1 is the newest) holds step end_index - (K-1-k).
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t back = K - 1 - k;
    if (back > end_index) continue;
    const std::size_t t = end_index - back;
    w.valid[k] = 1;
    w.timesteps[k] = static_cast<int>(t);
    w.rtgs[k] = rtg[t];
    const auto s = traj.state(t, dim);
    std::copy(s.begin(), s.end(), w.states.begin() + static_cast<std::ptrdiff_t>(k * d));
    if (t + 1 < traj.length()) {
      w.has_target[k] = 1;
      const auto sn = traj.state(t + 1, dim);
      std::copy(sn.begin(), sn.end(), w.next_states.begin() + static_cast<std::ptrdiff_t>(k * d));
    }
  }
  return w;
}

WindowSampler::WindowSampler(const ActionFreeDataset& dataset,
                             std::vector<std::size_t> trajectories, int context_len)
    : dataset_(&dataset), trajectories_(std::move(trajectories)), context_len_(context_len) {
  if (context_len < 1) throw std::invalid_argument("WindowSampler: context length must be >= 1");
  if (trajectories_.empty()) throw std::invalid_argument("WindowSampler: empty trajectory set");
  std::size_t acc = 0;
  for (auto i : trajectories_) {
    acc += dataset.trajectory(i).length();
    offsets_.push_back(acc);
  }
}

WindowSampler::WindowSampler(const ActionFreeDataset& dataset, int context_len)
    : WindowSampler(
          dataset,
          [&] {
            std::vector<std::size_t> all(dataset.size());
            for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
            return all;
          }(),
          context_len) {}

Window WindowSampler::draw(Rng& rng) const {
  const std::size_t pick = rng.index(pair_count());
  const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), pick);
  const auto slot = static_cast<std::size_t>(it - offsets_.begin());
  const std::size_t start = slot == 0 ? 0 : offsets_[slot - 1];
  return make_window(*dataset_, trajectories_[slot], pick - start, context_len_);
}

std::vector<Window> WindowSampler::sample(int batch, Rng& rng) const {
  std::vector<Window> out;
  out.reserve(static_cast<std::size_t>(batch));
  for (int b = 0; b < batch; ++b) out.push_back(draw(rng));
  return out;
}

std::vector<Window> sample_windows(const ActionFreeDataset& dataset, int batch, int context_len,
                                   Rng& rng) {
  return WindowSampler(dataset, context_len).sample(batch, rng);
}

GeneratedDataset generate_behavior_dataset(std::string_view env_name, envs::PolicyKind policy,
                                           int n_episodes, std::uint64_t seed) {
  if (n_episodes < 1) throw std::invalid_argument("generate_behavior_dataset: n_episodes < 1");
  auto env = envs::make_env(env_name);
  const int dim = env->spec().state_dim;
  envs::ScriptedPolicy controller(*env, policy, seed);
  std::vector<Trajectory> trajs;
  std::vector<EpisodeSummary> summaries;
  for (int ep = 0; ep < n_episodes; ++ep) {
    Trajectory traj;
    EpisodeSummary summary;
    std::vector<double> s = env->reset(mix_key(seed, 0xDA7Aull, static_cast<std::uint64_t>(ep)));
    while (true) {
      const auto a = controller.act(s);
      const auto res = env->step(a);
      for (double v : s) traj.states.push_back(static_cast<float>(v));
      traj.rewards.push_back(static_cast<float>(res.reward));
      summary.episode_return += res.reward;
      s = res.state;
      if (res.done()) {
        summary.success = res.success;
        break;
      }
    }
    // Final state, no reward follows it.
    for (double v : s) traj.states.push_back(static_cast<float>(v));
    traj.rewards.push_back(0.0f);
    summary.length = traj.length();
    trajs.push_back(std::move(traj));
    summaries.push_back(summary);
  }
  return {ActionFreeDataset(dim, std::move(trajs)), std::move(summaries)};
}

}  // namespace afguide::data

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "afguide/envs/env.hpp"
#include "afguide/rng.hpp"

namespace afguide::data {

/// One action-free episode: states s_0..s_{T-1} (row-major, T x state_dim)
/// and the reward received after acting in each state. The final state of
/// an episode is stored with reward 0.
struct Trajectory {
  std::vector<float> states;
  std::vector<float> rewards;

  std::size_t length() const { return rewards.size(); }
  std::span<const float> state(std::size_t t, int state_dim) const {
    return {states.data() + t * static_cast<std::size_t>(state_dim),
            static_cast<std::size_t>(state_dim)};
  }
  bool operator==(const Trajectory&) const = default;
};

/// Returns-to-go: out[t] = sum of rewards[t..T-1].
std::vector<double> compute_rtg(std::span<const float> rewards);
std::vector<double> compute_rtg(std::span<const double> rewards);

struct NormStats {
  std::vector<double> mean;
  std::vector<double> sigma;       // population standard deviation
  std::vector<std::uint8_t> flagged;  // sigma < kDegenerateSigma

  static constexpr double kDegenerateSigma = 1e-6;

  /// Divisor used when normalizing dimension i: sigma, or 1 if flagged.
  double divisor(std::size_t i) const { return flagged[i] ? 1.0 : sigma[i]; }
  bool operator==(const NormStats&) const = default;
};

/// Population mean and standard deviation over every state of every
/// trajectory. Throws std::invalid_argument with fewer than two states.
NormStats compute_state_std(std::span<const Trajectory> trajectories, int state_dim);

/// Immutable after construction: validates the trajectories and caches
/// returns-to-go and normalization statistics.
class ActionFreeDataset {
 public:
  ActionFreeDataset(int state_dim, std::vector<Trajectory> trajectories);

  int state_dim() const { return state_dim_; }
  std::size_t size() const { return trajectories_.size(); }
  std::size_t total_steps() const { return total_steps_; }
  const Trajectory& trajectory(std::size_t i) const { return trajectories_.at(i); }
  const std::vector<Trajectory>& trajectories() const { return trajectories_; }
  const std::vector<double>& rtg(std::size_t i) const { return rtg_.at(i); }
  const NormStats& norm_stats() const { return stats_; }

  bool operator==(const ActionFreeDataset& o) const {
    return state_dim_ == o.state_dim_ && trajectories_ == o.trajectories_;
  }

 private:
  int state_dim_;
  std::vector<Trajectory> trajectories_;
  std::vector<std::vector<double>> rtg_;
  NormStats stats_;
  std::size_t total_steps_ = 0;
};

/// K consecutive steps ending at `end_index`, left-padded with zeros.
/// `next_states` row k holds s_{t+1} for the state in row k when
/// `has_target[k]` is set (the episode's last state has no successor).
struct Window {
  int context_len = 0;
  int state_dim = 0;
  std::vector<double> states;
  std::vector<double> next_states;
  std::vector<double> rtgs;
  std::vector<int> timesteps;
  std::vector<std::uint8_t> valid;
  std::vector<std::uint8_t> has_target;
  std::size_t trajectory = 0;
  std::size_t end_index = 0;

  int valid_count() const;
};

Window make_window(const ActionFreeDataset& dataset, std::size_t trajectory,
                   std::size_t end_index, int context_len);

/// Draws windows uniformly over (trajectory, end-index) pairs of a subset
/// of trajectories.
class WindowSampler {
 public:
  WindowSampler(const ActionFreeDataset& dataset, std::vector<std::size_t> trajectories,
                int context_len);
  WindowSampler(const ActionFreeDataset& dataset, int context_len);

  Window draw(Rng& rng) const;
  std::vector<Window> sample(int batch, Rng& rng) const;
  std::size_t pair_count() const { return offsets_.empty() ? 0 : offsets_.back(); }

 private:
  const ActionFreeDataset* dataset_;
  std::vector<std::size_t> trajectories_;
  std::vector<std::size_t> offsets_;  // prefix sums of lengths
  int context_len_;
};

std::vector<Window> sample_windows(const ActionFreeDataset& dataset, int batch, int context_len,
                                   Rng& rng);

struct EpisodeSummary {
  std::size_t length = 0;
  double episode_return = 0.0;
  bool success = false;
};

struct GeneratedDataset {
  ActionFreeDataset dataset;
  std::vector<EpisodeSummary> episodes;
};

/// Rolls out a scripted controller and keeps only states and rewards.
GeneratedDataset generate_behavior_dataset(std::string_view env_name, envs::PolicyKind policy,
                                           int n_episodes, std::uint64_t seed);

class DatasetError : public std::runtime_error {
 public:
  enum class Kind { kIo, kBadMagic, kBadVersion, kTruncated, kNonFinite, kInvalid };
  DatasetError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr char kDatasetMagic[4] = {'A', 'F', 'D', '1'};
inline constexpr std::uint16_t kDatasetVersion = 1;

/// Little-endian layout: "AFD1", u16 version, u32 state_dim,
/// u32 n_trajectories, then per trajectory u32 T, T*state_dim f32 states
/// (row-major), T f32 rewards.
std::string encode_dataset(const ActionFreeDataset& dataset);
ActionFreeDataset decode_dataset(std::string_view bytes);
void save_dataset(const ActionFreeDataset& dataset, const std::string& path);
ActionFreeDataset load_dataset(const std::string& path);

}  // namespace afguide::data

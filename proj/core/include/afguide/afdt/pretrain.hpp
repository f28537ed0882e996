#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "afguide/afdt/model.hpp"
#include "afguide/nn/optimizer.hpp"

namespace afguide::afdt {

struct AfdtConfig {
  int context_len = 20;
  nn::TransformerSpec trunk{3, 1, 128, 0.1, 40};
  double rtg_scale = 1.0;
  PlannerMode mode = PlannerMode::kUdrl;
  int max_timestep = 300;
  int train_steps = 50000;
  int batch = 64;
  double lr = 1e-4;
  double weight_decay = 1e-4;
  std::vector<int> checkpoint_steps{3000, 5000, 10000, 15000, 30000, 50000};
  double holdout_fraction = 0.1;
  int val_windows = 256;
  int log_interval = 100;

  void validate() const;
  AfdtArch arch(int state_dim) const;
  bool operator==(const AfdtConfig&) const = default;
};

/// Mean absolute error between predicted and true state changes over the
/// rows that have a successor. Writes d(loss)/d(delta) into `grad` when
/// given. Returns 0 when no row has a target.
template <typename T>
double l1_delta_loss(const nn::Matrix<T>& delta, const AfdtBatch<T>& batch,
                     nn::Matrix<T>* grad = nullptr);

/// One optimizer step on the L1 objective.
class AfdtTrainer {
 public:
  AfdtTrainer(AfdtModel<float>& model, const AfdtConfig& config, std::uint64_t seed);

  /// Returns the pre-update loss. Throws std::runtime_error (and applies no
  /// update) when the loss is not finite.
  double step(const AfdtBatch<float>& batch);
  const nn::Adam<float>& optimizer() const { return opt_; }

 private:
  AfdtModel<float>* model_;
  nn::Adam<float> opt_;
  Rng dropout_rng_;
};

/// Eval-mode L1 over a fixed set of batches, weighted by target count.
double evaluate_l1(AfdtModel<float>& model, const std::vector<AfdtBatch<float>>& batches);

struct PretrainLogRow {
  int step = 0;
  double train_loss = 0.0;  // mean over the steps since the previous row
  double val_loss = 0.0;
};

struct CheckpointScore {
  int step = 0;
  double val_loss = 0.0;
};

struct PretrainResult {
  AfdtModel<float> model;  // the selected checkpoint
  AfdtConfig config;
  int selected_step = 0;
  double untrained_val_loss = 0.0;
  std::vector<CheckpointScore> checkpoints;
  std::vector<PretrainLogRow> log;
  std::vector<std::size_t> train_trajectories;
  std::vector<std::size_t> val_trajectories;
  data::NormStats norm;
};

/// Trains on windows of the training split, scores the listed checkpoint
/// steps on a fixed sample of held-out windows and keeps the one with the
/// lowest held-out L1 (the earliest on ties).
PretrainResult pretrain(const data::ActionFreeDataset& dataset, const AfdtConfig& config,
                        std::uint64_t seed);

std::string pretrain_log_csv(const std::vector<PretrainLogRow>& log);

/// Everything needed to rebuild a planner next to its weights.
struct AfdtSidecar {
  AfdtConfig config;
  int state_dim = 0;
  int selected_step = 0;
  double untrained_val_loss = 0.0;
  std::vector<CheckpointScore> checkpoints;
  data::NormStats norm;
};

struct LoadedAfdt {
  AfdtModel<float> model;
  AfdtSidecar meta;
};

/// Writes `path` (AFGC weights) and `path + ".json"` (sidecar).
void save_afdt(const std::string& path, AfdtModel<float>& model, const AfdtSidecar& meta);
LoadedAfdt load_afdt(const std::string& path);

AfdtSidecar make_sidecar(const PretrainResult& result, int state_dim);

}  // namespace afguide::afdt

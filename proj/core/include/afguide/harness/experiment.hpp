#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "afguide/config_json.hpp"
#include "afguide/sac/trainer.hpp"

namespace afguide::harness {

/// Initial return-to-go used when the config does not set one.
double default_initial_rtg(std::string_view env_name);

struct ExperimentConfig {
  std::string env = "corridor";
  std::string dataset;                // action-free dataset (AFD1) for pretraining
  std::string afdt_checkpoint;        // return-conditioned planner; skips pretraining
  std::string imitation_checkpoint;   // planner without RTG input, for imitation_guided
  afdt::AfdtConfig afdt;
  sac::GuidedSacConfig sac;           // `mode` is overridden per entry of `modes`
  std::vector<std::string> modes{"guided"};
  std::int64_t total_steps = 30000;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3};
  std::string output_dir = "runs";
  std::optional<double> initial_rtg;
  std::uint64_t pretrain_seed = 0;
  int workers = 1;

  /// Checks values and that referenced files exist.
  void validate() const;
  double resolved_initial_rtg() const;
};

Json to_json(const ExperimentConfig& config);
/// Unknown keys are an error; missing keys keep their defaults.
ExperimentConfig experiment_config_from_json(const Json& j);
ExperimentConfig load_experiment_config(const std::string& path);

/// Hex SHA-1 of "blob <size>\0<content>", as `git hash-object` prints it.
std::string git_blob_sha1(std::string_view content);

struct SeedRun {
  std::string mode;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::string csv_path;
  std::string agent_path;
  std::vector<sac::CurveRow> rows;
};

struct ExperimentResult {
  std::vector<SeedRun> runs;
  std::vector<std::string> outputs;  // every file written, manifest included
  std::string manifest_path;
};

/// Pretrains the planners the requested modes need (unless checkpoints are
/// given), trains every (mode, seed) pair, writes one curve CSV and agent
/// checkpoint per pair, one summary CSV per mode, and a manifest. A failing
/// pair is recorded and the rest still run.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct SummaryRow {
  std::int64_t step = 0;
  int n = 0;
  double return_mean = 0, return_std = 0, return_median = 0;
  double success_mean = 0, success_std = 0, success_median = 0;
};

inline constexpr const char* kSummaryHeader =
    "step,n,eval_return_mean,eval_return_std,eval_return_median,success_rate_mean,"
    "success_rate_std,success_rate_median";

/// Per evaluation step: mean, population std and median across files.
/// Throws std::invalid_argument naming the first file whose header differs.
std::vector<SummaryRow> aggregate_report(const std::vector<std::string>& csv_paths);
std::vector<SummaryRow> aggregate_rows(const std::vector<std::vector<sac::CurveRow>>& runs);
std::string summary_csv(const std::vector<SummaryRow>& rows);
std::vector<sac::CurveRow> parse_curve_csv(std::string_view text, const std::string& where);

/// Deterministic evaluation of a saved agent.
sac::EvalResult evaluate_checkpoint(const std::string& agent_path, const std::string& env_name,
                                    int n_episodes, std::uint64_t seed);

}  // namespace afguide::harness

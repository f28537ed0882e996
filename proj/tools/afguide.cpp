// afguide command-line driver: dataset generation, planner pretraining,
// guided / plain SAC training, evaluation and report aggregation.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "afguide/afdt/pretrain.hpp"
#include "afguide/binary_io.hpp"
#include "afguide/config_json.hpp"
#include "afguide/dataset/dataset.hpp"
#include "afguide/harness/experiment.hpp"

namespace fs = std::filesystem;
using namespace afguide;

namespace {

Json read_json(const std::string& path) {
  try {
    return Json::parse(io::read_file(path));
  } catch (const Json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

int gen_data(const std::string& env, const std::string& policy, int episodes, std::uint64_t seed,
             const std::string& out, std::string summary) {
  const auto gen =
      data::generate_behavior_dataset(env, envs::parse_policy_kind(policy), episodes, seed);
  data::save_dataset(gen.dataset, out);
  if (summary.empty()) summary = out + ".episodes.csv";
  std::ostringstream csv;
  csv << "episode,length,return,success\n";
  double total = 0.0;
  int successes = 0;
  for (std::size_t i = 0; i < gen.episodes.size(); ++i) {
    const auto& e = gen.episodes[i];
    csv << i << ',' << e.length << ',' << format_double(e.episode_return) << ','
        << (e.success ? 1 : 0) << '\n';
    total += e.episode_return;
    successes += e.success ? 1 : 0;
  }
  io::write_file(summary, csv.str());
  std::printf("wrote %s: %zu trajectories, %zu states, mean return %.4g, success %d/%d\n",
              out.c_str(), gen.dataset.size(), gen.dataset.total_steps(), total / episodes,
              successes, episodes);
  return 0;
}

int pretrain_cmd(const std::string& data_path, const std::string& config_path,
                 const std::string& out, std::uint64_t seed, const std::string& mode) {
  afdt::AfdtConfig cfg;
  if (!config_path.empty()) {
    Json j = read_json(config_path);
    if (j.contains("afdt")) j = j.at("afdt");  // accept a full experiment config too
    cfg = afdt_config_from_json(j);
  }
  if (!mode.empty()) cfg.mode = afdt::parse_planner_mode(mode);
  const auto dataset = data::load_dataset(data_path);
  auto result = afdt::pretrain(dataset, cfg, seed);
  afdt::save_afdt(out, result.model, afdt::make_sidecar(result, dataset.state_dim()));
  io::write_file(out + ".log.csv", afdt::pretrain_log_csv(result.log));
  std::printf("selected step %d: val L1 %.6g (untrained %.6g)\n", result.selected_step,
              [&] {
                for (const auto& c : result.checkpoints) {
                  if (c.step == result.selected_step) return c.val_loss;
                }
                return result.untrained_val_loss;
              }(),
              result.untrained_val_loss);
  return 0;
}

struct TrainArgs {
  std::string env = "corridor";
  std::string mode = "guided";
  std::string afdt_path;
  std::string config_path;
  double beta = 3.0;
  std::optional<double> rtg;
  std::int64_t steps = 30000;
  std::uint64_t seed = 0;
  std::string out = "runs";
};

int train_cmd(const TrainArgs& a, bool beta_given) {
  sac::GuidedSacConfig sc;
  if (!a.config_path.empty()) {
    Json j = read_json(a.config_path);
    if (j.contains("sac")) j = j.at("sac");
    sc = sac_config_from_json(j);
  }
  sc.mode = sac::parse_agent_mode(a.mode);
  if (beta_given || a.config_path.empty()) sc.beta = a.beta;
  sc.validate();
  std::optional<sac::Planner> planner;
  if (sac::uses_planner(sc.mode)) {
    if (a.afdt_path.empty()) throw std::invalid_argument("--afdt is required for this mode");
    auto loaded = afdt::load_afdt(a.afdt_path);
    std::vector<double> div(loaded.meta.norm.sigma.size());
    for (std::size_t i = 0; i < div.size(); ++i) div[i] = loaded.meta.norm.divisor(i);
    planner = sac::Planner{std::move(loaded.model), std::move(div)};
  }
  const double rtg0 = a.rtg ? *a.rtg : harness::default_initial_rtg(a.env);
  sac::GuidedTrainer trainer(envs::make_env(a.env), sc, std::move(planner), rtg0, a.seed);
  const auto rows = trainer.run(a.steps);
  fs::create_directories(a.out);
  const std::string stem =
      (fs::path(a.out) / (std::string(sac::to_string(sc.mode)) + "_seed" + std::to_string(a.seed)))
          .string();
  io::write_file(stem + ".csv", sac::curve_csv(rows));
  sac::save_agent(stem + ".agent", trainer.agent(), a.env);
  if (!rows.empty()) {
    std::printf("step %lld: eval return %.6g, success %.3g\n",
                static_cast<long long>(rows.back().step), rows.back().eval_return,
                rows.back().success_rate);
  }
  std::printf("wrote %s.csv and %s.agent\n", stem.c_str(), stem.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"afguide: action-free planner guided soft actor-critic"};
  app.require_subcommand(1);

  std::string env = "corridor", policy = "medium", out, summary;
  int episodes = 100;
  std::uint64_t seed = 0;
  auto* gen = app.add_subcommand("gen-data", "roll out a scripted policy and keep states and rewards");
  gen->add_option("--env", env, "environment name")->check(CLI::IsMember(envs::env_names()));
  gen->add_option("--policy", policy, "expert | medium | random");
  gen->add_option("--episodes", episodes, "number of episodes")->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "generator seed");
  gen->add_option("--out", out, "output dataset (.afd)")->required();
  gen->add_option("--summary", summary, "per-episode CSV (default <out>.episodes.csv)");

  std::string data_path, config_path, ckpt_out, planner_mode;
  std::uint64_t pretrain_seed = 0;
  auto* pre = app.add_subcommand("pretrain", "train the state planner on an action-free dataset");
  pre->add_option("--data", data_path, "dataset (.afd)")->required()->check(CLI::ExistingFile);
  pre->add_option("--config", config_path, "planner config JSON")->check(CLI::ExistingFile);
  pre->add_option("--out", ckpt_out, "output checkpoint")->required();
  pre->add_option("--seed", pretrain_seed, "training seed");
  pre->add_option("--mode", planner_mode, "udrl | imitation (overrides the config)");

  TrainArgs ta;
  double rtg = 0.0;
  auto* train = app.add_subcommand("train", "train an agent online");
  train->add_option("--env", ta.env, "environment name")->check(CLI::IsMember(envs::env_names()));
  train->add_option("--mode", ta.mode, "guided | sac | reward_mix | imitation_guided");
  train->add_option("--afdt", ta.afdt_path, "planner checkpoint")->check(CLI::ExistingFile);
  auto* beta_opt = train->add_option("--beta", ta.beta, "weight of the guiding critic");
  auto* rtg_opt = train->add_option("--rtg", rtg, "initial return-to-go");
  train->add_option("--steps", ta.steps, "environment steps");
  train->add_option("--seed", ta.seed, "seed");
  train->add_option("--out", ta.out, "output directory");
  train->add_option("--config", ta.config_path, "SAC config JSON")->check(CLI::ExistingFile);

  std::vector<std::string> report_in;
  std::string report_out;
  auto* report = app.add_subcommand("report", "aggregate learning curves across seeds");
  report->add_option("--in", report_in, "learning-curve CSVs")->required()->check(CLI::ExistingFile);
  report->add_option("--out", report_out, "summary CSV")->required();

  std::string agent_path;
  int eval_episodes = 10;
  std::uint64_t eval_seed = 0;
  auto* eval = app.add_subcommand("eval", "evaluate a saved agent deterministically");
  eval->add_option("--agent", agent_path, "agent checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--env", env, "environment name")->required();
  eval->add_option("--episodes", eval_episodes, "episodes");
  eval->add_option("--seed", eval_seed, "seed");

  std::string experiment_path;
  auto* run = app.add_subcommand("run", "run a full experiment from a JSON config");
  run->add_option("--config", experiment_path, "experiment config JSON")
      ->required()
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return gen_data(env, policy, episodes, seed, out, summary);
    if (*pre) return pretrain_cmd(data_path, config_path, ckpt_out, pretrain_seed, planner_mode);
    if (*train) {
      if (*rtg_opt) ta.rtg = rtg;
      return train_cmd(ta, static_cast<bool>(*beta_opt));
    }
    if (*report) {
      io::write_file(report_out, harness::summary_csv(harness::aggregate_report(report_in)));
      std::printf("wrote %s\n", report_out.c_str());
      return 0;
    }
    if (*eval) {
      const auto r = harness::evaluate_checkpoint(agent_path, env, eval_episodes, eval_seed);
      for (std::size_t i = 0; i < r.returns.size(); ++i) {
        std::printf("episode %zu: return %.6g success %d\n", i, r.returns[i], r.successes[i]);
      }
      std::printf("mean return %.6g, success rate %.3g\n", r.mean_return, r.success_rate);
      return 0;
    }
    if (*run) {
      const auto cfg = harness::load_experiment_config(experiment_path);
      const auto res = harness::run_experiment(cfg);
      int failed = 0;
      for (const auto& r : res.runs) {
        if (!r.ok) {
          ++failed;
          std::fprintf(stderr, "afguide: %s seed %llu failed: %s\n", r.mode.c_str(),
                       static_cast<unsigned long long>(r.seed), r.error.c_str());
        }
      }
      std::printf("wrote %s (%zu runs, %d failed)\n", res.manifest_path.c_str(), res.runs.size(),
                  failed);
      return failed == 0 ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "afguide: error: %s\n", e.what());
    return 1;
  }
  return 0;
}

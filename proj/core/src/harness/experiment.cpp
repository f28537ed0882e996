#include "afguide/harness/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "afguide/binary_io.hpp"

namespace afguide::harness {

namespace fs = std::filesystem;

double default_initial_rtg(std::string_view env_name) {
  if (env_name == "corridor") return 150.0;
  if (env_name == "pointmaze-sparse") return 1.0;
  if (env_name == "pointmaze-dense") return -50.0;
  throw std::invalid_argument("unknown environment '" + std::string(env_name) + "'");
}

namespace {

bool needs_udrl(const std::vector<std::string>& modes) {
  return std::any_of(modes.begin(), modes.end(), [](const std::string& m) {
    const auto k = sac::parse_agent_mode(m);
    return k == sac::AgentMode::kGuided || k == sac::AgentMode::kRewardMix;
  });
}

bool needs_imitation(const std::vector<std::string>& modes) {
  return std::any_of(modes.begin(), modes.end(), [](const std::string& m) {
    return sac::parse_agent_mode(m) == sac::AgentMode::kImitationGuided;
  });
}

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) {
    throw std::invalid_argument(std::string(what) + " '" + path + "' does not exist");
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  default_initial_rtg(env);  // rejects unknown names
  if (modes.empty()) throw std::invalid_argument("config: modes must not be empty");
  std::set<std::string> seen_modes;
  for (const auto& m : modes) {
    const std::string canon(sac::to_string(sac::parse_agent_mode(m)));
    if (!seen_modes.insert(canon).second) {
      throw std::invalid_argument("config: mode '" + m + "' listed twice");
    }
  }
  if (total_steps < 0) throw std::invalid_argument("config: total_steps must be >= 0");
  if (seeds.empty()) throw std::invalid_argument("config: seeds must not be empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw std::invalid_argument("config: seeds must be distinct");
  }
  if (workers < 1) throw std::invalid_argument("config: workers must be >= 1");
  if (output_dir.empty()) throw std::invalid_argument("config: output_dir must be set");
  afdt.validate();
  sac.validate();
  if (!dataset.empty()) require_file(dataset, "dataset");
  if (!afdt_checkpoint.empty()) require_file(afdt_checkpoint, "planner checkpoint");
  if (!imitation_checkpoint.empty()) require_file(imitation_checkpoint, "imitation checkpoint");
  if (needs_udrl(modes) && afdt_checkpoint.empty() && dataset.empty()) {
    throw std::invalid_argument("config: guided modes need a dataset or a planner checkpoint");
  }
  if (needs_imitation(modes) && imitation_checkpoint.empty() && dataset.empty()) {
    throw std::invalid_argument("config: imitation_guided needs a dataset or a checkpoint");
  }
}

double ExperimentConfig::resolved_initial_rtg() const {
  return initial_rtg ? *initial_rtg : default_initial_rtg(env);
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["env"] = c.env;
  j["dataset"] = c.dataset;
  j["afdt_checkpoint"] = c.afdt_checkpoint;
  j["imitation_checkpoint"] = c.imitation_checkpoint;
  j["afdt"] = afguide::to_json(c.afdt);
  j["sac"] = afguide::to_json(c.sac);
  j["modes"] = c.modes;
  j["total_steps"] = c.total_steps;
  j["seeds"] = c.seeds;
  j["output_dir"] = c.output_dir;
  j["initial_rtg"] = c.resolved_initial_rtg();
  j["pretrain_seed"] = c.pretrain_seed;
  j["workers"] = c.workers;
  return j;
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  require_known_keys(j,
                     {"env", "dataset", "afdt_checkpoint", "imitation_checkpoint", "afdt", "sac",
                      "modes", "total_steps", "seeds", "output_dir", "initial_rtg",
                      "pretrain_seed", "workers"},
                     "experiment config");
  ExperimentConfig c;
  auto read = [&](const char* key, auto& out) {
    if (j.contains(key)) out = j.at(key).get<std::decay_t<decltype(out)>>();
  };
  read("env", c.env);
  read("dataset", c.dataset);
  read("afdt_checkpoint", c.afdt_checkpoint);
  read("imitation_checkpoint", c.imitation_checkpoint);
  if (j.contains("afdt")) c.afdt = afdt_config_from_json(j.at("afdt"));
  if (j.contains("sac")) c.sac = sac_config_from_json(j.at("sac"));
  read("modes", c.modes);
  read("total_steps", c.total_steps);
  read("seeds", c.seeds);
  read("output_dir", c.output_dir);
  if (j.contains("initial_rtg") && !j.at("initial_rtg").is_null()) {
    c.initial_rtg = j.at("initial_rtg").get<double>();
  }
  read("pretrain_seed", c.pretrain_seed);
  read("workers", c.workers);
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  try {
    return experiment_config_from_json(Json::parse(io::read_file(path)));
  } catch (const Json::exception& e) {
    throw std::invalid_argument("config " + path + ": " + e.what());
  }
}

std::string git_blob_sha1(std::string_view content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw std::runtime_error("git_blob_sha1: out of memory");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("git_blob_sha1: digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

namespace {

struct PlannerBundle {
  sac::Planner planner;
  Json info;
};

PlannerBundle obtain_planner(const ExperimentConfig& c, afdt::PlannerMode mode,
                             const std::string& checkpoint, std::vector<std::string>& outputs) {
  const std::string tag(afdt::to_string(mode));
  afdt::LoadedAfdt loaded{afdt::AfdtModel<float>(c.afdt.arch(1)), {}};
  Json info;
  if (!checkpoint.empty()) {
    loaded = afdt::load_afdt(checkpoint);
    if (loaded.meta.config.mode != mode) {
      throw std::invalid_argument("planner checkpoint '" + checkpoint + "' was trained in " +
                                  std::string(afdt::to_string(loaded.meta.config.mode)) +
                                  " mode, expected " + tag);
    }
    info["source"] = "checkpoint";
    info["checkpoint"] = checkpoint;
  } else {
    const auto dataset = data::load_dataset(c.dataset);
    afdt::AfdtConfig cfg = c.afdt;
    cfg.mode = mode;
    auto result = afdt::pretrain(dataset, cfg, c.pretrain_seed);
    const auto meta = afdt::make_sidecar(result, dataset.state_dim());
    const std::string ckpt = (fs::path(c.output_dir) / ("planner_" + tag + ".ckpt")).string();
    const std::string log = (fs::path(c.output_dir) / ("planner_" + tag + "_log.csv")).string();
    afdt::save_afdt(ckpt, result.model, meta);
    io::write_file(log, afdt::pretrain_log_csv(result.log));
    outputs.insert(outputs.end(), {ckpt, ckpt + ".json", log});
    loaded = afdt::load_afdt(ckpt);
    info["source"] = "pretrained";
    info["checkpoint"] = ckpt;
  }
  info["mode"] = tag;
  info["selected_step"] = loaded.meta.selected_step;
  info["untrained_val_loss"] = loaded.meta.untrained_val_loss;
  Json cks = Json::array();
  for (const auto& ck : loaded.meta.checkpoints) {
    cks.push_back({{"step", ck.step}, {"val_loss", ck.val_loss}});
  }
  info["checkpoints"] = cks;
  std::vector<double> divisors(loaded.meta.norm.sigma.size());
  for (std::size_t i = 0; i < divisors.size(); ++i) divisors[i] = loaded.meta.norm.divisor(i);
  return {sac::Planner{std::move(loaded.model), std::move(divisors)}, info};
}

Json file_entry(const std::string& path) {
  return {{"path", path}, {"git_sha1", git_blob_sha1(io::read_file(path))}};
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  fs::create_directories(config.output_dir);
  ExperimentResult result;

  std::optional<PlannerBundle> udrl;
  std::optional<PlannerBundle> imitation;
  if (needs_udrl(config.modes)) {
    udrl = obtain_planner(config, afdt::PlannerMode::kUdrl, config.afdt_checkpoint, result.outputs);
  }
  if (needs_imitation(config.modes)) {
    imitation = obtain_planner(config, afdt::PlannerMode::kImitation, config.imitation_checkpoint,
                               result.outputs);
  }

  for (const auto& m : config.modes) {
    for (auto seed : config.seeds) {
      SeedRun run;
      run.mode = std::string(sac::to_string(sac::parse_agent_mode(m)));
      run.seed = seed;
      const std::string stem = run.mode + "_seed" + std::to_string(seed);
      run.csv_path = (fs::path(config.output_dir) / (stem + ".csv")).string();
      run.agent_path = (fs::path(config.output_dir) / (stem + ".agent")).string();
      result.runs.push_back(std::move(run));
    }
  }

  const double rtg0 = config.resolved_initial_rtg();
  auto execute = [&](SeedRun& run) {
    try {
      sac::GuidedSacConfig sc = config.sac;
      sc.mode = sac::parse_agent_mode(run.mode);
      std::optional<sac::Planner> planner;
      if (sc.mode == sac::AgentMode::kImitationGuided) {
        planner = imitation->planner;
      } else if (sac::uses_planner(sc.mode)) {
        planner = udrl->planner;
      }
      sac::GuidedTrainer trainer(envs::make_env(config.env), sc, std::move(planner), rtg0, run.seed);
      run.rows = trainer.run(config.total_steps);
      io::write_file(run.csv_path, sac::curve_csv(run.rows));
      sac::save_agent(run.agent_path, trainer.agent(), config.env);
      run.ok = true;
    } catch (const std::exception& e) {
      run.ok = false;
      run.error = e.what();
    }
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < result.runs.size(); i = next++) execute(result.runs[i]);
  };
  const int n_threads = std::min<int>(config.workers, static_cast<int>(result.runs.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  Json runs = Json::array();
  std::map<std::string, std::vector<std::vector<sac::CurveRow>>> by_mode;
  for (const auto& run : result.runs) {
    Json r{{"mode", run.mode}, {"seed", run.seed}, {"status", run.ok ? "ok" : "failed"}};
    if (run.ok) {
      r["csv"] = run.csv_path;
      r["agent"] = run.agent_path;
      result.outputs.insert(result.outputs.end(),
                            {run.csv_path, run.agent_path, run.agent_path + ".json"});
      by_mode[run.mode].push_back(run.rows);
    } else {
      r["error"] = run.error;
    }
    runs.push_back(r);
  }
  for (const auto& m : config.modes) {
    const std::string mode(sac::to_string(sac::parse_agent_mode(m)));
    const auto it = by_mode.find(mode);
    if (it == by_mode.end()) continue;
    const std::string path = (fs::path(config.output_dir) / (mode + "_summary.csv")).string();
    io::write_file(path, summary_csv(aggregate_rows(it->second)));
    result.outputs.push_back(path);
  }

  Json manifest;
  manifest["config"] = to_json(config);
  Json inputs = Json::array();
  for (const std::string* p : {&config.dataset, &config.afdt_checkpoint, &config.imitation_checkpoint}) {
    if (p->empty()) continue;
    inputs.push_back(file_entry(*p));
    if (p != &config.dataset) inputs.push_back(file_entry(*p + ".json"));
  }
  manifest["inputs"] = inputs;
  if (!udrl && !imitation) {
    manifest["planner"] = "none";
  } else {
    Json planners = Json::object();
    if (udrl) planners["udrl"] = udrl->info;
    if (imitation) planners["imitation"] = imitation->info;
    manifest["planner"] = planners;
  }
  manifest["runs"] = runs;
  result.manifest_path = (fs::path(config.output_dir) / "manifest.json").string();
  Json outputs = Json::array();
  for (const auto& p : result.outputs) outputs.push_back(file_entry(p));
  outputs.push_back({{"path", result.manifest_path}});
  manifest["outputs"] = outputs;
  result.outputs.push_back(result.manifest_path);
  io::write_file(result.manifest_path, manifest.dump(2) + "\n");
  return result;
}

std::vector<sac::CurveRow> parse_curve_csv(std::string_view text, const std::string& where) {
  std::vector<sac::CurveRow> rows;
  std::size_t pos = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= text.size()) return false;
    const auto end = text.find('\n', pos);
    line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() : end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return true;
  };
  std::string_view line;
  if (!next_line(line) || line != sac::kCurveHeader) {
    throw std::invalid_argument("header mismatch in " + where);
  }
  int line_no = 1;
  while (next_line(line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> f;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const std::string cell(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                : comma - start));
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size()) {
        throw std::invalid_argument("bad number '" + cell + "' in " + where + " line " +
                                    std::to_string(line_no));
      }
      f.push_back(v);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (f.size() != 9) {
      throw std::invalid_argument("wrong column count in " + where + " line " +
                                  std::to_string(line_no));
    }
    rows.push_back({static_cast<std::int64_t>(f[0]), static_cast<std::int64_t>(f[1]), f[2], f[3],
                    f[4], f[5], f[6], f[7], f[8]});
  }
  return rows;
}

namespace {

void moments(std::vector<double> v, double& mean, double& stddev, double& median) {
  const double n = static_cast<double>(v.size());
  mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  stddev = std::sqrt(ss / n);
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  median = v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace

std::vector<SummaryRow> aggregate_rows(const std::vector<std::vector<sac::CurveRow>>& runs) {
  if (runs.empty()) throw std::invalid_argument("aggregate: no runs");
  std::map<std::int64_t, std::pair<std::vector<double>, std::vector<double>>> by_step;
  for (const auto& run : runs) {
    for (const auto& r : run) {
      by_step[r.step].first.push_back(r.eval_return);
      by_step[r.step].second.push_back(r.success_rate);
    }
  }
  std::vector<SummaryRow> out;
  for (const auto& [step, vals] : by_step) {
    SummaryRow row;
    row.step = step;
    row.n = static_cast<int>(vals.first.size());
    moments(vals.first, row.return_mean, row.return_std, row.return_median);
    moments(vals.second, row.success_mean, row.success_std, row.success_median);
    out.push_back(row);
  }
  return out;
}

std::vector<SummaryRow> aggregate_report(const std::vector<std::string>& csv_paths) {
  if (csv_paths.empty()) throw std::invalid_argument("report: no input files");
  std::vector<std::vector<sac::CurveRow>> runs;
  for (const auto& p : csv_paths) runs.push_back(parse_curve_csv(io::read_file(p), p));
  return aggregate_rows(runs);
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  out << kSummaryHeader << '\n';
  for (const auto& r : rows) {
    out << r.step << ',' << r.n << ',' << format_double(r.return_mean) << ','
        << format_double(r.return_std) << ',' << format_double(r.return_median) << ','
        << format_double(r.success_mean) << ',' << format_double(r.success_std) << ','
        << format_double(r.success_median) << '\n';
  }
  return out.str();
}

sac::EvalResult evaluate_checkpoint(const std::string& agent_path, const std::string& env_name,
                                    int n_episodes, std::uint64_t seed) {
  if (n_episodes < 1) throw std::invalid_argument("evaluate: n_episodes must be >= 1");
  auto loaded = sac::load_agent(agent_path);
  auto env = envs::make_env(env_name);
  return sac::evaluate_policy(*loaded.agent, *env, n_episodes, seed);
}

}  // namespace afguide::harness

#include "afguide/sac/trainer.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "afguide/binary_io.hpp"
#include "afguide/config_json.hpp"

namespace afguide::sac {

template <typename T>
EvalResult evaluate_policy(GuidedSacAgent<T>& agent, envs::Environment& env, int episodes,
                           std::uint64_t seed) {
  if (episodes < 1) throw std::invalid_argument("evaluate: episode count must be >= 1");
  if (env.spec().state_dim != agent.state_dim() || env.spec().action_dim != agent.action_dim()) {
    throw std::invalid_argument("evaluate: agent dimensions do not match environment '" +
                                env.spec().name + "'");
  }
  EvalResult out;
  Rng unused(0);
  for (int ep = 0; ep < episodes; ++ep) {
    std::vector<double> s = env.reset(mix_key(seed, 0xE7A1ull, static_cast<std::uint64_t>(ep)));
    double ret = 0.0;
    bool success = false;
    while (true) {
      const auto res = env.step(agent.act(s, true, unused));
      ret += res.reward;
      s = res.state;
      if (res.done()) {
        success = res.success;
        break;
      }
    }
    out.returns.push_back(ret);
    out.successes.push_back(success ? 1 : 0);
    out.mean_return += ret;
    out.success_rate += success ? 1.0 : 0.0;
  }
  out.mean_return /= episodes;
  out.success_rate /= episodes;
  return out;
}

template EvalResult evaluate_policy(GuidedSacAgent<float>&, envs::Environment&, int, std::uint64_t);
template EvalResult evaluate_policy(GuidedSacAgent<double>&, envs::Environment&, int, std::uint64_t);

std::string curve_csv(const std::vector<CurveRow>& rows) {
  std::ostringstream out;
  out << kCurveHeader << '\n';
  for (const auto& r : rows) {
    out << r.step << ',' << r.episode << ',' << format_double(r.eval_return) << ','
        << format_double(r.success_rate) << ',' << format_double(r.loss_qe) << ','
        << format_double(r.loss_qg) << ',' << format_double(r.loss_pi) << ','
        << format_double(r.alpha) << ',' << format_double(r.mean_rg) << '\n';
  }
  return out.str();
}

GuidedTrainer::GuidedTrainer(std::unique_ptr<envs::Environment> env, const GuidedSacConfig& config,
                             std::optional<Planner> planner, double initial_rtg, std::uint64_t seed)
    : env_(std::move(env)),
      eval_env_(env_->clone()),
      config_(config),
      agent_(env_->spec().state_dim, env_->spec().action_dim, config, mix_key(seed, 0xA9E7ull)),
      planner_(std::move(planner)),
      buffer_(env_->spec().state_dim, env_->spec().action_dim, config.buffer_capacity),
      initial_rtg_(initial_rtg),
      seed_(seed),
      action_rng_(mix_key(seed, 0xAC7ull)),
      replay_rng_(mix_key(seed, 0x2E9ull)),
      update_rng_(mix_key(seed, 0x09Dull)) {
  const int sd = env_->spec().state_dim;
  if (uses_planner(config.mode)) {
    if (!planner_) {
      throw std::invalid_argument("mode '" + std::string(to_string(config.mode)) +
                                  "' needs a planner checkpoint");
    }
    const auto& arch = planner_->model.arch();
    if (arch.state_dim != sd || static_cast<int>(planner_->divisors.size()) != sd) {
      throw std::invalid_argument("planner state dimension does not match environment");
    }
    if (arch.max_timestep + 1 < env_->spec().max_episode_steps) {
      throw std::invalid_argument("planner timestep table is shorter than the episode limit");
    }
    ctx_.emplace(arch.context_len, sd);
  } else {
    planner_.reset();
  }
  start_episode();
}

void GuidedTrainer::start_episode() {
  state_ = env_->reset(mix_key(seed_, 0xE9150DEull, static_cast<std::uint64_t>(episodes_)));
  if (ctx_) ctx_->reset(state_, initial_rtg_);
}

Transition GuidedTrainer::collect_step() {
  std::optional<std::vector<double>> plan;
  if (planner_) {
    try {
      plan = afdt::plan_next_state(planner_->model, *ctx_);
      for (double v : *plan) {
        if (!std::isfinite(v)) throw std::runtime_error("non-finite plan");
      }
    } catch (const std::exception&) {
      ++planner_incidents_;
      plan.reset();
    }
  }
  std::vector<double> a;
  if (env_steps_ < config_.warmup_steps) {
    const auto& spec = env_->spec();
    a.resize(static_cast<std::size_t>(spec.action_dim));
    for (auto& v : a) v = action_rng_.uniform(spec.action_low, spec.action_high);
  } else {
    a = agent_.act(state_, false, action_rng_);
  }
  const envs::StepResult res = env_->step(a);
  Transition t;
  t.s = state_;
  t.a = a;
  t.r_e = res.reward;
  t.r_g = plan ? guiding_reward(*plan, res.state, planner_->divisors) : 0.0;
  t.terminated = res.terminated;
  t.truncated = res.truncated;
  t.s2 = res.state;
  if (ctx_) ctx_->update(res.state, res.reward);
  buffer_.add(t);
  ++env_steps_;
  sum_rg_ += t.r_g;
  ++n_steps_window_;
  state_ = res.state;
  if (res.done()) {
    ++episodes_;
    start_episode();
  }
  return t;
}

EvalResult GuidedTrainer::evaluate(int episodes) {
  return evaluate_policy(agent_, *eval_env_, episodes, mix_key(seed_, 0xE7A1Dull));
}

std::vector<CurveRow> GuidedTrainer::run(std::int64_t total_steps) {
  std::vector<CurveRow> rows;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  while (env_steps_ < total_steps) {
    collect_step();
    if (env_steps_ > config_.warmup_steps) {
      for (int g = 0; g < config_.gradient_steps; ++g) {
        const auto batch = buffer_.sample<float>(config_.batch, replay_rng_);
        try {
          const auto st = agent_.update(batch, update_rng_);
          ++updates_;
          ++n_updates_window_;
          sum_qe_ += st.loss_qe;
          sum_qg_ += st.loss_qg;
          sum_pi_ += st.loss_pi;
        } catch (const UpdateAborted&) {
          ++aborted_;
        }
      }
    }
    if (env_steps_ % config_.eval_interval == 0) {
      CurveRow row;
      row.step = env_steps_;
      row.episode = episodes_;
      if (config_.eval_episodes > 0) {
        const EvalResult ev = evaluate(config_.eval_episodes);
        row.eval_return = ev.mean_return;
        row.success_rate = ev.success_rate;
      }
      const double nu = static_cast<double>(n_updates_window_);
      row.loss_qe = n_updates_window_ > 0 ? sum_qe_ / nu : nan;
      row.loss_qg = n_updates_window_ > 0 ? sum_qg_ / nu : nan;
      row.loss_pi = n_updates_window_ > 0 ? sum_pi_ / nu : nan;
      row.alpha = agent_.alpha();
      row.mean_rg = n_steps_window_ > 0 ? sum_rg_ / static_cast<double>(n_steps_window_) : nan;
      rows.push_back(row);
      sum_qe_ = sum_qg_ = sum_pi_ = sum_rg_ = 0.0;
      n_updates_window_ = n_steps_window_ = 0;
    }
  }
  return rows;
}

void save_agent(const std::string& path, GuidedSacAgent<float>& agent, const std::string& env_name) {
  nn::save_checkpoint(path, agent.export_tensors());
  Json j;
  j["env"] = env_name;
  j["state_dim"] = agent.state_dim();
  j["action_dim"] = agent.action_dim();
  j["config"] = to_json(agent.config());
  io::write_file(path + ".json", j.dump(2) + "\n");
}

LoadedAgent load_agent(const std::string& path) {
  const auto tensors = nn::load_checkpoint(path);
  Json j;
  try {
    j = Json::parse(io::read_file(path + ".json"));
  } catch (const Json::exception& e) {
    throw std::runtime_error("cannot parse agent sidecar " + path + ".json: " + e.what());
  }
  require_known_keys(j, {"env", "state_dim", "action_dim", "config"}, "agent sidecar");
  LoadedAgent out;
  out.env_name = j.at("env").get<std::string>();
  out.agent = std::make_unique<GuidedSacAgent<float>>(
      j.at("state_dim").get<int>(), j.at("action_dim").get<int>(),
      sac_config_from_json(j.at("config")), 0);
  out.agent->import_tensors(tensors);
  return out;
}

}  // namespace afguide::sac

#include "afguide/config_json.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace afguide {

void require_known_keys(const Json& j, std::initializer_list<const char*> allowed,
                        const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed) known = known || item.key() == k;
    if (!known) throw std::invalid_argument(where + ": unknown key '" + item.key() + "'");
  }
}

namespace {

template <typename V>
void read(const Json& j, const char* key, V& out) {
  if (j.contains(key)) out = j.at(key).get<V>();
}

Json number_or_null(double v) { return std::isnan(v) ? Json(nullptr) : Json(v); }

}  // namespace

Json to_json(const nn::TransformerSpec& s) {
  return {{"n_blocks", s.n_blocks}, {"n_heads", s.n_heads}, {"d_embed", s.d_embed},
          {"dropout", s.dropout},   {"max_tokens", s.max_tokens}};
}

nn::TransformerSpec transformer_spec_from_json(const Json& j, nn::TransformerSpec s) {
  require_known_keys(j, {"n_blocks", "n_heads", "d_embed", "dropout", "max_tokens"}, "transformer");
  read(j, "n_blocks", s.n_blocks);
  read(j, "n_heads", s.n_heads);
  read(j, "d_embed", s.d_embed);
  read(j, "dropout", s.dropout);
  read(j, "max_tokens", s.max_tokens);
  s.validate();
  return s;
}

Json to_json(const afdt::AfdtConfig& c) {
  return {{"context_len", c.context_len},
          {"transformer", to_json(c.trunk)},
          {"rtg_scale", c.rtg_scale},
          {"mode", std::string(afdt::to_string(c.mode))},
          {"max_timestep", c.max_timestep},
          {"train_steps", c.train_steps},
          {"batch", c.batch},
          {"lr", c.lr},
          {"weight_decay", c.weight_decay},
          {"checkpoint_steps", c.checkpoint_steps},
          {"holdout_fraction", c.holdout_fraction},
          {"val_windows", c.val_windows},
          {"log_interval", c.log_interval}};
}

afdt::AfdtConfig afdt_config_from_json(const Json& j, afdt::AfdtConfig c) {
  require_known_keys(j,
                     {"context_len", "transformer", "rtg_scale", "mode", "max_timestep",
                      "train_steps", "batch", "lr", "weight_decay", "checkpoint_steps",
                      "holdout_fraction", "val_windows", "log_interval"},
                     "afdt");
  read(j, "context_len", c.context_len);
  c.trunk.max_tokens = 2 * c.context_len;
  if (j.contains("transformer")) c.trunk = transformer_spec_from_json(j.at("transformer"), c.trunk);
  read(j, "rtg_scale", c.rtg_scale);
  if (j.contains("mode")) c.mode = afdt::parse_planner_mode(j.at("mode").get<std::string>());
  read(j, "max_timestep", c.max_timestep);
  read(j, "train_steps", c.train_steps);
  read(j, "batch", c.batch);
  read(j, "lr", c.lr);
  read(j, "weight_decay", c.weight_decay);
  read(j, "checkpoint_steps", c.checkpoint_steps);
  read(j, "holdout_fraction", c.holdout_fraction);
  read(j, "val_windows", c.val_windows);
  read(j, "log_interval", c.log_interval);
  c.validate();
  return c;
}

Json to_json(const sac::GuidedSacConfig& c) {
  return {{"mode", std::string(sac::to_string(c.mode))},
          {"gamma", c.gamma},
          {"beta", c.beta},
          {"batch", c.batch},
          {"lr", c.lr},
          {"tau", c.tau},
          {"buffer_capacity", c.buffer_capacity},
          {"warmup_steps", c.warmup_steps},
          {"gradient_steps", c.gradient_steps},
          {"auto_entropy", c.auto_entropy},
          {"initial_alpha", c.initial_alpha},
          {"target_entropy", number_or_null(c.target_entropy)},
          {"hidden_dim", c.hidden_dim},
          {"n_hidden_layers", c.n_hidden_layers},
          {"eval_interval", c.eval_interval},
          {"eval_episodes", c.eval_episodes}};
}

sac::GuidedSacConfig sac_config_from_json(const Json& j, sac::GuidedSacConfig c) {
  require_known_keys(j,
                     {"mode", "gamma", "beta", "batch", "lr", "tau", "buffer_capacity",
                      "warmup_steps", "gradient_steps", "auto_entropy", "initial_alpha",
                      "target_entropy", "hidden_dim", "n_hidden_layers", "eval_interval",
                      "eval_episodes"},
                     "sac");
  if (j.contains("mode")) c.mode = sac::parse_agent_mode(j.at("mode").get<std::string>());
  read(j, "gamma", c.gamma);
  read(j, "beta", c.beta);
  read(j, "batch", c.batch);
  read(j, "lr", c.lr);
  read(j, "tau", c.tau);
  read(j, "buffer_capacity", c.buffer_capacity);
  read(j, "warmup_steps", c.warmup_steps);
  read(j, "gradient_steps", c.gradient_steps);
  read(j, "auto_entropy", c.auto_entropy);
  read(j, "initial_alpha", c.initial_alpha);
  if (j.contains("target_entropy")) {
    const auto& v = j.at("target_entropy");
    c.target_entropy = v.is_null() ? std::nan("") : v.get<double>();
  }
  read(j, "hidden_dim", c.hidden_dim);
  read(j, "n_hidden_layers", c.n_hidden_layers);
  read(j, "eval_interval", c.eval_interval);
  read(j, "eval_episodes", c.eval_episodes);
  c.validate();
  return c;
}

Json to_json(const data::NormStats& n) {
  return {{"mean", n.mean}, {"sigma", n.sigma}, {"flagged", n.flagged}};
}

data::NormStats norm_stats_from_json(const Json& j) {
  require_known_keys(j, {"mean", "sigma", "flagged"}, "norm");
  data::NormStats n;
  n.mean = j.at("mean").get<std::vector<double>>();
  n.sigma = j.at("sigma").get<std::vector<double>>();
  n.flagged = j.at("flagged").get<std::vector<std::uint8_t>>();
  if (n.mean.size() != n.sigma.size() || n.sigma.size() != n.flagged.size()) {
    throw std::invalid_argument("norm: inconsistent lengths");
  }
  return n;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int precision = 6; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

}  // namespace afguide

#include "afguide/afdt/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "afguide/binary_io.hpp"
#include "afguide/config_json.hpp"
#include "afguide/nn/checkpoint.hpp"

namespace afguide::afdt {

void AfdtConfig::validate() const {
  if (context_len < 1) throw std::invalid_argument("afdt: context_len must be >= 1");
  if (!(rtg_scale > 0.0)) throw std::invalid_argument("afdt: rtg_scale must be > 0");
  if (train_steps < 0) throw std::invalid_argument("afdt: train_steps must be >= 0");
  if (batch < 1) throw std::invalid_argument("afdt: batch must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("afdt: lr must be > 0");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw std::invalid_argument("afdt: holdout_fraction must be in [0, 1)");
  }
  if (val_windows < 1) throw std::invalid_argument("afdt: val_windows must be >= 1");
  if (log_interval < 1) throw std::invalid_argument("afdt: log_interval must be >= 1");
  for (std::size_t i = 0; i < checkpoint_steps.size(); ++i) {
    if (checkpoint_steps[i] < 1 || (i > 0 && checkpoint_steps[i] <= checkpoint_steps[i - 1])) {
      throw std::invalid_argument("afdt: checkpoint_steps must be positive and increasing");
    }
  }
  arch(1).validate();
}

AfdtArch AfdtConfig::arch(int state_dim) const {
  return {state_dim, context_len, max_timestep, trunk, rtg_scale, mode};
}

template <typename T>
double l1_delta_loss(const nn::Matrix<T>& delta, const AfdtBatch<T>& batch, nn::Matrix<T>* grad) {
  const int d = batch.state_dim;
  std::int64_t n = 0;
  for (auto h : batch.has_target) n += h;
  if (grad != nullptr) *grad = nn::Matrix<T>::Zero(delta.rows(), delta.cols());
  if (n == 0) return 0.0;
  const double denom = static_cast<double>(n) * d;
  const T g = static_cast<T>(1.0 / denom);
  double sum = 0.0;
  for (int r = 0; r < batch.rows(); ++r) {
    if (!batch.has_target[static_cast<std::size_t>(r)]) continue;
    for (int i = 0; i < d; ++i) {
      const T e = delta(r, i) - batch.target_delta(r, i);
      sum += std::abs(static_cast<double>(e));
      if (grad != nullptr) (*grad)(r, i) = e > T(0) ? g : (e < T(0) ? -g : T(0));
    }
  }
  return sum / denom;
}

template double l1_delta_loss(const nn::Matrix<float>&, const AfdtBatch<float>&, nn::Matrix<float>*);
template double l1_delta_loss(const nn::Matrix<double>&, const AfdtBatch<double>&,
                              nn::Matrix<double>*);

AfdtTrainer::AfdtTrainer(AfdtModel<float>& model, const AfdtConfig& config, std::uint64_t seed)
    : model_(&model),
      opt_(nn::OptimizerConfig::adamw(config.lr, config.weight_decay)),
      dropout_rng_(mix_key(seed, 0xD5091ull)) {}

double AfdtTrainer::step(const AfdtBatch<float>& batch) {
  const auto params = model_->params();
  nn::zero_grads(params);
  model_->forward(batch, true, &dropout_rng_);
  nn::Matrix<float> grad;
  const double loss = l1_delta_loss(model_->last_delta(), batch, &grad);
  if (!std::isfinite(loss)) {
    throw std::runtime_error("afdt train step: non-finite loss");
  }
  model_->backward(grad);
  opt_.step(params);
  return loss;
}

double evaluate_l1(AfdtModel<float>& model, const std::vector<AfdtBatch<float>>& batches) {
  double weighted = 0.0;
  double count = 0.0;
  for (const auto& b : batches) {
    model.forward(b, false);
    const double n = static_cast<double>(
        std::count(b.has_target.begin(), b.has_target.end(), std::uint8_t{1}));
    weighted += l1_delta_loss(model.last_delta(), b) * n;
    count += n;
  }
  return count > 0 ? weighted / count : 0.0;
}

namespace {

std::vector<nn::Matrix<float>> snapshot(AfdtModel<float>& model) {
  std::vector<nn::Matrix<float>> out;
  for (auto* p : model.params()) out.push_back(p->value);
  return out;
}

void restore(AfdtModel<float>& model, const std::vector<nn::Matrix<float>>& values) {
  const auto params = model.params();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

}  // namespace

PretrainResult pretrain(const data::ActionFreeDataset& dataset, const AfdtConfig& config,
                        std::uint64_t seed) {
  config.validate();
  std::size_t longest = 0;
  for (const auto& t : dataset.trajectories()) longest = std::max(longest, t.length());
  if (static_cast<int>(longest) - 1 > config.max_timestep) {
    throw std::invalid_argument("pretrain: episodes longer than max_timestep + 1 steps");
  }

  const Rng root(seed);
  // Held-out split by trajectory.
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng split_rng = root.fork(4);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[split_rng.index(i)]);
  }
  std::size_t n_val = 0;
  if (order.size() >= 2 && config.holdout_fraction > 0.0) {
    n_val = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(config.holdout_fraction * static_cast<double>(order.size()))),
        1, order.size() - 1);
  }
  PretrainResult result{AfdtModel<float>(config.arch(dataset.state_dim())), config, 0, 0.0, {}, {}, {}, {}, {}};
  result.norm = dataset.norm_stats();
  result.val_trajectories.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  result.train_trajectories.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(result.val_trajectories.begin(), result.val_trajectories.end());
  std::sort(result.train_trajectories.begin(), result.train_trajectories.end());
  const auto& val_set = n_val > 0 ? result.val_trajectories : result.train_trajectories;

  const data::WindowSampler train_sampler(dataset, result.train_trajectories, config.context_len);
  const data::WindowSampler val_sampler(dataset, val_set, config.context_len);
  Rng val_rng = root.fork(5);
  std::vector<AfdtBatch<float>> val_batches;
  for (int left = config.val_windows; left > 0; left -= config.batch) {
    val_batches.push_back(
        AfdtBatch<float>::from_windows(val_sampler.sample(std::min(left, config.batch), val_rng)));
  }

  AfdtModel<float>& model = result.model;
  Rng init_rng = root.fork(2);
  model.init(init_rng);
  result.untrained_val_loss = evaluate_l1(model, val_batches);

  std::vector<int> marks;
  for (int s : config.checkpoint_steps) {
    if (s <= config.train_steps) marks.push_back(s);
  }
  if (marks.empty()) marks.push_back(config.train_steps);
  if (config.train_steps == 0) {
    result.checkpoints.push_back({0, result.untrained_val_loss});
    result.selected_step = 0;
    return result;
  }

  AfdtTrainer trainer(model, config, root.fork(3).next_u64());
  Rng window_rng = root.fork(1);
  std::vector<nn::Matrix<float>> best = snapshot(model);
  double best_loss = std::numeric_limits<double>::infinity();
  result.selected_step = marks.front();
  double loss_acc = 0.0;
  int loss_n = 0;
  std::size_t next_mark = 0;
  for (int step = 1; step <= config.train_steps; ++step) {
    loss_acc += trainer.step(
        AfdtBatch<float>::from_windows(train_sampler.sample(config.batch, window_rng)));
    ++loss_n;
    const bool is_mark = next_mark < marks.size() && marks[next_mark] == step;
    const bool is_log = step % config.log_interval == 0 || step == config.train_steps;
    if (!is_mark && !is_log) continue;
    const double val = evaluate_l1(model, val_batches);
    result.log.push_back({step, loss_acc / loss_n, val});
    loss_acc = 0.0;
    loss_n = 0;
    if (is_mark) {
      result.checkpoints.push_back({step, val});
      if (val < best_loss) {
        best_loss = val;
        best = snapshot(model);
        result.selected_step = step;
      }
      ++next_mark;
    }
  }
  restore(model, best);
  return result;
}

std::string pretrain_log_csv(const std::vector<PretrainLogRow>& log) {
  std::ostringstream out;
  out << "step,train_loss,val_loss\n";
  for (const auto& r : log) {
    out << r.step << ',' << format_double(r.train_loss) << ',' << format_double(r.val_loss) << '\n';
  }
  return out.str();
}

AfdtSidecar make_sidecar(const PretrainResult& result, int state_dim) {
  return {result.config, state_dim, result.selected_step, result.untrained_val_loss,
          result.checkpoints, result.norm};
}

void save_afdt(const std::string& path, AfdtModel<float>& model, const AfdtSidecar& meta) {
  nn::save_checkpoint(path, nn::export_params(model.params()));
  Json j;
  j["config"] = to_json(meta.config);
  j["state_dim"] = meta.state_dim;
  j["selected_step"] = meta.selected_step;
  j["untrained_val_loss"] = meta.untrained_val_loss;
  Json cks = Json::array();
  for (const auto& c : meta.checkpoints) cks.push_back({{"step", c.step}, {"val_loss", c.val_loss}});
  j["checkpoints"] = cks;
  j["norm"] = to_json(meta.norm);
  io::write_file(path + ".json", j.dump(2) + "\n");
}

LoadedAfdt load_afdt(const std::string& path) {
  const auto tensors = nn::load_checkpoint(path);
  Json j;
  try {
    j = Json::parse(io::read_file(path + ".json"));
  } catch (const Json::exception& e) {
    throw std::runtime_error("cannot parse planner sidecar " + path + ".json: " + e.what());
  }
  require_known_keys(j, {"config", "state_dim", "selected_step", "untrained_val_loss",
                         "checkpoints", "norm"}, "planner sidecar");
  AfdtSidecar meta;
  meta.config = afdt_config_from_json(j.at("config"));
  meta.state_dim = j.at("state_dim").get<int>();
  meta.selected_step = j.at("selected_step").get<int>();
  meta.untrained_val_loss = j.at("untrained_val_loss").get<double>();
  for (const auto& c : j.at("checkpoints")) {
    meta.checkpoints.push_back({c.at("step").get<int>(), c.at("val_loss").get<double>()});
  }
  meta.norm = norm_stats_from_json(j.at("norm"));
  if (static_cast<int>(meta.norm.sigma.size()) != meta.state_dim) {
    throw std::runtime_error("planner sidecar: norm statistics do not match state_dim");
  }
  LoadedAfdt out{AfdtModel<float>(meta.config.arch(meta.state_dim)), meta};
  nn::import_params(tensors, out.model.params());
  return out;
}

}  // namespace afguide::afdt

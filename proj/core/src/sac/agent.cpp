#include "afguide/sac/agent.hpp"

#include <algorithm>

namespace afguide::sac {

AgentMode parse_agent_mode(std::string_view name) {
  std::string n(name);
  std::replace(n.begin(), n.end(), '-', '_');
  if (n == "guided") return AgentMode::kGuided;
  if (n == "sac") return AgentMode::kSac;
  if (n == "reward_mix") return AgentMode::kRewardMix;
  if (n == "imitation_guided") return AgentMode::kImitationGuided;
  throw std::invalid_argument("unknown mode '" + std::string(name) + "'");
}

std::string_view to_string(AgentMode mode) {
  switch (mode) {
    case AgentMode::kGuided: return "guided";
    case AgentMode::kSac: return "sac";
    case AgentMode::kRewardMix: return "reward_mix";
    case AgentMode::kImitationGuided: return "imitation_guided";
  }
  return "?";
}

bool uses_planner(AgentMode mode) { return mode != AgentMode::kSac; }
bool uses_guide_critic(AgentMode mode) {
  return mode == AgentMode::kGuided || mode == AgentMode::kImitationGuided;
}

void GuidedSacConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must be in [0, 1)");
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must be in (0, 1]");
  if (batch < 1) throw std::invalid_argument("batch must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be > 0");
  if (buffer_capacity < 1) throw std::invalid_argument("buffer_capacity must be >= 1");
  if (warmup_steps < 0) throw std::invalid_argument("warmup_steps must be >= 0");
  if (gradient_steps < 0) throw std::invalid_argument("gradient_steps must be >= 0");
  if (!(initial_alpha > 0.0)) throw std::invalid_argument("initial_alpha must be > 0");
  if (hidden_dim < 1 || n_hidden_layers < 0) throw std::invalid_argument("bad network size");
  if (eval_interval < 1) throw std::invalid_argument("eval_interval must be >= 1");
  if (eval_episodes < 0) throw std::invalid_argument("eval_episodes must be >= 0");
}

bool GuidedSacConfig::operator==(const GuidedSacConfig& o) const {
  const bool same_entropy = (std::isnan(target_entropy) && std::isnan(o.target_entropy)) ||
                            target_entropy == o.target_entropy;
  return mode == o.mode && gamma == o.gamma && beta == o.beta && batch == o.batch &&
         lr == o.lr && tau == o.tau && buffer_capacity == o.buffer_capacity &&
         warmup_steps == o.warmup_steps && gradient_steps == o.gradient_steps &&
         auto_entropy == o.auto_entropy && initial_alpha == o.initial_alpha && same_entropy &&
         hidden_dim == o.hidden_dim && n_hidden_layers == o.n_hidden_layers &&
         eval_interval == o.eval_interval && eval_episodes == o.eval_episodes;
}

namespace {

nn::MlpSpec net_spec(const GuidedSacConfig& c, int in, int out) {
  return {in, c.hidden_dim, c.n_hidden_layers, out};
}

template <typename T>
double mean_of(const nn::Matrix<T>& m) {
  return static_cast<double>(m.sum()) / static_cast<double>(m.size());
}

}  // namespace

template <typename T>
GuidedSacAgent<T>::GuidedSacAgent(int state_dim, int action_dim, const GuidedSacConfig& config,
                                  std::uint64_t seed)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      config_(config),
      target_entropy_(std::isnan(config.target_entropy) ? -static_cast<double>(action_dim)
                                                        : config.target_entropy),
      actor_("actor", net_spec(config, state_dim, 2 * action_dim)),
      q1_("q1", net_spec(config, state_dim + action_dim, 1)),
      q2_("q2", net_spec(config, state_dim + action_dim, 1)),
      q1_tgt_("q1_target", net_spec(config, state_dim + action_dim, 1)),
      q2_tgt_("q2_target", net_spec(config, state_dim + action_dim, 1)),
      qg_("q_guide", net_spec(config, state_dim + action_dim, 1)),
      log_alpha_("log_alpha", {1}),
      actor_opt_(nn::OptimizerConfig::adam(config.lr)),
      critic_opt_(nn::OptimizerConfig::adam(config.lr)),
      guide_opt_(nn::OptimizerConfig::adam(config.lr)),
      alpha_opt_(nn::OptimizerConfig::adam(config.lr)) {
  config.validate();
  if (state_dim < 1 || action_dim < 1) {
    throw std::invalid_argument("GuidedSacAgent: dims must be >= 1");
  }
  const Rng root(seed);
  Rng r1 = root.fork(1), r2 = root.fork(2), r3 = root.fork(3), r4 = root.fork(4);
  actor_.init(r1);
  q1_.init(r2);
  q2_.init(r3);
  qg_.init(r4);
  nn::copy_values(q1_.params(), q1_tgt_.params());
  nn::copy_values(q2_.params(), q2_tgt_.params());
  log_alpha_.value(0, 0) = static_cast<T>(std::log(config.initial_alpha));
}

template <typename T>
nn::Matrix<T> GuidedSacAgent<T>::concat(const nn::Matrix<T>& s, const nn::Matrix<T>& a) const {
  nn::Matrix<T> sa(s.rows(), s.cols() + a.cols());
  sa << s, a;
  return sa;
}

template <typename T>
std::vector<double> GuidedSacAgent<T>::act(std::span<const double> state, bool deterministic,
                                           Rng& rng) {
  if (static_cast<int>(state.size()) != state_dim_) {
    throw std::invalid_argument("GuidedSacAgent::act: wrong state size");
  }
  nn::Matrix<T> x(1, state_dim_);
  for (int i = 0; i < state_dim_; ++i) x(0, i) = static_cast<T>(state[static_cast<std::size_t>(i)]);
  nn::Matrix<T> out = actor_.infer(x);
  if (!out.allFinite()) {
    ++incidents_;
    out = out.unaryExpr([](T v) { return std::isfinite(v) ? v : T(0); });
  }
  std::vector<double> a(static_cast<std::size_t>(action_dim_));
  if (deterministic) {
    for (int j = 0; j < action_dim_; ++j) a[static_cast<std::size_t>(j)] = std::tanh(out(0, j));
    return a;
  }
  const auto smp = squashed_sample<T>(out, standard_normal<T>(1, action_dim_, rng));
  for (int j = 0; j < action_dim_; ++j) a[static_cast<std::size_t>(j)] = smp.action(0, j);
  return a;
}

template <typename T>
nn::Matrix<T> GuidedSacAgent<T>::critic_targets(const TransitionBatch<T>& batch,
                                                const nn::Matrix<T>& next_noise) {
  const auto next = squashed_sample<T>(actor_.infer(batch.s2), next_noise);
  const nn::Matrix<T> sa2 = concat(batch.s2, next.action);
  const nn::Matrix<T> min_q = q1_tgt_.infer(sa2).cwiseMin(q2_tgt_.infer(sa2));
  const T alpha = static_cast<T>(this->alpha());
  const T gamma = static_cast<T>(config_.gamma);
  nn::Matrix<T> r = batch.r_e;
  if (config_.mode == AgentMode::kRewardMix) r += static_cast<T>(config_.beta) * batch.r_g;
  const nn::Matrix<T> soft_value = min_q - alpha * next.log_prob;
  nn::Matrix<T> y =
      r.array() + gamma * (T(1) - batch.terminated.array()) * soft_value.array();
  return y;
}

template <typename T>
double GuidedSacAgent<T>::critic_env_loss(const TransitionBatch<T>& batch, const nn::Matrix<T>& y,
                                          bool accumulate) {
  const nn::Matrix<T> sa = concat(batch.s, batch.a);
  const nn::Matrix<T> e1 = q1_.forward(sa) - y;
  const nn::Matrix<T> e2 = q2_.forward(sa) - y;
  const double loss = 0.5 * (mean_of<T>(e1.cwiseAbs2()) + mean_of<T>(e2.cwiseAbs2()));
  if (accumulate) {
    const T scale = T(1) / static_cast<T>(batch.size());
    q1_.backward(e1 * scale);
    q2_.backward(e2 * scale);
  }
  return loss;
}

template <typename T>
double GuidedSacAgent<T>::critic_update_env(const TransitionBatch<T>& batch,
                                            const nn::Matrix<T>& next_noise) {
  const nn::Matrix<T> y = critic_targets(batch, next_noise);
  if (!y.allFinite()) throw UpdateAborted("critic_update_env: non-finite target");
  const auto params = critic_params();
  nn::zero_grads(params);
  const double loss = critic_env_loss(batch, y, true);
  if (!std::isfinite(loss)) {
    nn::zero_grads(params);
    throw UpdateAborted("critic_update_env: non-finite loss");
  }
  critic_opt_.step(params);
  nn::polyak_update(q1_.params(), q1_tgt_.params(), config_.tau);
  nn::polyak_update(q2_.params(), q2_tgt_.params(), config_.tau);
  return loss;
}

template <typename T>
double GuidedSacAgent<T>::guide_loss(const TransitionBatch<T>& batch, bool accumulate) {
  const nn::Matrix<T> e = qg_.forward(concat(batch.s, batch.a)) - batch.r_g;
  const double loss = 0.5 * mean_of<T>(e.cwiseAbs2());
  if (accumulate) qg_.backward(e / static_cast<T>(batch.size()));
  return loss;
}

template <typename T>
double GuidedSacAgent<T>::critic_update_guide(const TransitionBatch<T>& batch) {
  const auto params = qg_.params();
  nn::zero_grads(params);
  const double loss = guide_loss(batch, true);
  if (!std::isfinite(loss)) {
    nn::zero_grads(params);
    throw UpdateAborted("critic_update_guide: non-finite loss");
  }
  guide_opt_.step(params);
  return loss;
}

template <typename T>
ActorLossParts GuidedSacAgent<T>::actor_loss(const TransitionBatch<T>& batch,
                                             const nn::Matrix<T>& noise, bool accumulate) {
  const auto n = batch.size();
  const auto smp = squashed_sample<T>(actor_.forward(batch.s), noise);
  const nn::Matrix<T> sa = concat(batch.s, smp.action);
  const nn::Matrix<T> q1 = q1_.forward(sa);
  const nn::Matrix<T> q2 = q2_.forward(sa);
  const bool guide = uses_guide_critic(config_.mode);
  const T beta = static_cast<T>(config_.beta);
  nn::Matrix<T> combined = q1.cwiseMin(q2);
  if (guide) combined += beta * qg_.forward(sa);
  const T alpha = static_cast<T>(this->alpha());
  const nn::Matrix<T> per_sample = alpha * smp.log_prob - combined;
  ActorLossParts parts{mean_of<T>(per_sample), mean_of<T>(smp.log_prob)};
  if (accumulate) {
    const T d = -T(1) / static_cast<T>(n);
    const auto first = (q1.array() <= q2.array());
    const nn::Matrix<T> dq1 = first.select(nn::Matrix<T>::Constant(n, 1, d), T(0));
    const nn::Matrix<T> dq2 = first.select(T(0), nn::Matrix<T>::Constant(n, 1, d));
    nn::Matrix<T> dsa = q1_.backward(dq1, nn::GradMode::kInputOnly);
    dsa += q2_.backward(dq2, nn::GradMode::kInputOnly);
    if (guide) {
      dsa += qg_.backward(nn::Matrix<T>::Constant(n, 1, beta * d), nn::GradMode::kInputOnly);
    }
    const nn::Matrix<T> d_action = dsa.rightCols(action_dim_);
    const nn::Matrix<T> d_log_prob = nn::Matrix<T>::Constant(n, 1, alpha / static_cast<T>(n));
    actor_.backward(squashed_sample_backward(smp, d_action, d_log_prob));
  }
  return parts;
}

template <typename T>
std::pair<double, double> GuidedSacAgent<T>::actor_and_temperature_update(
    const TransitionBatch<T>& batch, const nn::Matrix<T>& noise) {
  const auto params = actor_.params();
  nn::zero_grads(params);
  const ActorLossParts parts = actor_loss(batch, noise, true);
  if (!std::isfinite(parts.loss)) {
    nn::zero_grads(params);
    throw UpdateAborted("actor update: non-finite loss");
  }
  actor_opt_.step(params);
  double loss_alpha = 0.0;
  if (config_.auto_entropy) {
    const double gap = parts.mean_log_prob + target_entropy_;
    loss_alpha = -static_cast<double>(log_alpha_.value(0, 0)) * gap;
    log_alpha_.grad(0, 0) = static_cast<T>(-gap);
    alpha_opt_.step({&log_alpha_});
  }
  return {parts.loss, loss_alpha};
}

template <typename T>
typename GuidedSacAgent<T>::UpdateStats GuidedSacAgent<T>::update(const TransitionBatch<T>& batch,
                                                                  Rng& rng) {
  const auto n = batch.size();
  const nn::Matrix<T> next_noise = standard_normal<T>(n, action_dim_, rng);
  const nn::Matrix<T> noise = standard_normal<T>(n, action_dim_, rng);
  UpdateStats st;
  st.loss_qe = critic_update_env(batch, next_noise);
  if (uses_guide_critic(config_.mode)) st.loss_qg = critic_update_guide(batch);
  std::tie(st.loss_pi, st.loss_alpha) = actor_and_temperature_update(batch, noise);
  return st;
}

template <typename T>
nn::ParamList<T> GuidedSacAgent<T>::critic_params() {
  nn::ParamList<T> out = q1_.params();
  for (auto* p : q2_.params()) out.push_back(p);
  return out;
}

template <typename T>
nn::ParamList<T> GuidedSacAgent<T>::all_params() {
  nn::ParamList<T> out;
  for (nn::Mlp<T>* m : {&actor_, &q1_, &q2_, &q1_tgt_, &q2_tgt_, &qg_}) {
    for (auto* p : m->params()) out.push_back(p);
  }
  out.push_back(&log_alpha_);
  return out;
}

template <typename T>
std::vector<nn::NamedTensor> GuidedSacAgent<T>::export_tensors() {
  return nn::export_params(all_params());
}

template <typename T>
void GuidedSacAgent<T>::import_tensors(const std::vector<nn::NamedTensor>& tensors) {
  nn::import_params(tensors, all_params());
}

template class GuidedSacAgent<float>;
template class GuidedSacAgent<double>;

}  // namespace afguide::sac

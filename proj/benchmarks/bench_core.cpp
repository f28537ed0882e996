#include <benchmark/benchmark.h>

#include "afguide/afdt/planner.hpp"
#include "afguide/afdt/pretrain.hpp"
#include "afguide/envs/env.hpp"
#include "afguide/sac/agent.hpp"

using namespace afguide;

namespace {

std::vector<data::Window> random_windows(int n, int K, int dim, Rng& rng) {
  std::vector<data::Window> ws;
  for (int b = 0; b < n; ++b) {
    data::Window w;
    w.context_len = K;
    w.state_dim = dim;
    for (int k = 0; k < K; ++k) {
      for (int i = 0; i < dim; ++i) {
        w.states.push_back(rng.normal());
        w.next_states.push_back(rng.normal());
      }
      w.rtgs.push_back(rng.uniform(-50, 50));
      w.timesteps.push_back(k);
      w.valid.push_back(1);
      w.has_target.push_back(1);
    }
    ws.push_back(std::move(w));
  }
  return ws;
}

void BM_MlpForwardBackward(benchmark::State& st) {
  const int batch = static_cast<int>(st.range(0));
  nn::Mlp<float> net("m", {20, 256, 2, 1});
  Rng rng(1);
  net.init(rng);
  const nn::Matrix<float> x = sac::standard_normal<float>(batch, 20, rng);
  const nn::Matrix<float> dy = nn::Matrix<float>::Ones(batch, 1);
  for (auto _ : st) {
    benchmark::DoNotOptimize(net.forward(x).data());
    benchmark::DoNotOptimize(net.backward(dy).data());
  }
  st.SetItemsProcessed(st.iterations() * batch);
}
BENCHMARK(BM_MlpForwardBackward)->Arg(1)->Arg(256);

void BM_TransformerForward(benchmark::State& st) {
  const int batch = static_cast<int>(st.range(0));
  nn::Transformer<float> tr("t", {3, 1, 128, 0.0, 40});
  Rng rng(2);
  tr.init(rng);
  const nn::TokenLayout layout{batch, 40, std::vector<std::uint8_t>(static_cast<std::size_t>(batch * 40), 1)};
  const nn::Matrix<float> x = sac::standard_normal<float>(batch * 40, 128, rng);
  for (auto _ : st) benchmark::DoNotOptimize(tr.forward(x, layout).data());
}
BENCHMARK(BM_TransformerForward)->Arg(1)->Arg(64);

void BM_SacUpdate(benchmark::State& st) {
  sac::GuidedSacConfig cfg;
  cfg.hidden_dim = static_cast<int>(st.range(0));
  sac::GuidedSacAgent<float> agent(4, 2, cfg, 3);
  Rng rng(3);
  sac::TransitionBatch<float> b;
  b.s = sac::standard_normal<float>(cfg.batch, 4, rng);
  b.a = sac::standard_normal<float>(cfg.batch, 2, rng).array().tanh();
  b.r_e = sac::standard_normal<float>(cfg.batch, 1, rng);
  b.r_g = -sac::standard_normal<float>(cfg.batch, 1, rng).cwiseAbs();
  b.terminated = nn::Matrix<float>::Zero(cfg.batch, 1);
  b.s2 = sac::standard_normal<float>(cfg.batch, 4, rng);
  for (auto _ : st) benchmark::DoNotOptimize(agent.update(b, rng));
}
BENCHMARK(BM_SacUpdate)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_PlannerTrainStep(benchmark::State& st) {
  afdt::AfdtConfig cfg;
  afdt::AfdtModel<float> m(cfg.arch(4));
  Rng rng(4);
  m.init(rng);
  afdt::AfdtTrainer trainer(m, cfg, 4);
  const auto batch = afdt::AfdtBatch<float>::from_windows(random_windows(cfg.batch, cfg.context_len, 4, rng));
  for (auto _ : st) benchmark::DoNotOptimize(trainer.step(batch));
}
BENCHMARK(BM_PlannerTrainStep)->Unit(benchmark::kMillisecond);

void BM_PlanNextState(benchmark::State& st) {
  afdt::AfdtConfig cfg;
  afdt::AfdtModel<float> m(cfg.arch(4));
  Rng rng(5);
  m.init(rng);
  afdt::PlannerContext ctx(cfg.context_len, 4);
  std::vector<double> s{0.1, 0.2, 0.3, 0.4};
  ctx.reset(s, 1.0);
  for (int t = 0; t < cfg.context_len; ++t) {
    s[0] = rng.normal();
    ctx.update(s, 0.0);
  }
  for (auto _ : st) benchmark::DoNotOptimize(afdt::plan_next_state(m, ctx));
}
BENCHMARK(BM_PlanNextState);

void BM_EnvStep(benchmark::State& st) {
  auto env = envs::make_env("pointmaze-sparse");
  Rng rng(6);
  env->reset(rng.next_u64());
  const std::vector<double> a{0.3, -0.2};
  for (auto _ : st) {
    const auto r = env->step(a);
    if (r.terminated || r.truncated) env->reset(rng.next_u64());
    benchmark::DoNotOptimize(r.reward);
  }
}
BENCHMARK(BM_EnvStep);

}  // namespace
BENCHMARK_MAIN();

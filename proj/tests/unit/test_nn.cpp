#include <gtest/gtest.h>

#include "afguide/nn/checkpoint.hpp"
#include "afguide/nn/grad_check.hpp"
#include "afguide/nn/mlp.hpp"
#include "afguide/nn/optimizer.hpp"
#include "afguide/nn/transformer.hpp"
#include "../support/test_util.hpp"

using namespace afguide;
using namespace afguide::nn;

namespace {

template <typename T>
Matrix<T> random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  Matrix<T> m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(rng.normal() * scale);
  return m;
}

// Mlp whose hidden pre-activations all stay at least 1e-3 away from zero.
Mlp<double> kink_free_mlp(const MlpSpec& spec, const Matrix<double>& x, std::uint64_t seed) {
  for (std::uint64_t s = seed;; ++s) {
    Mlp<double> net("m", spec);
    Rng rng(s);
    net.init(rng);
    for (auto& l : net.layers()) init_uniform(l.bias, 0.1, rng);
    if (net.min_abs_preactivation(x).minCoeff() >= 1e-3) return net;
  }
}

}  // namespace

TEST(Mlp, IdentityWeightsPassInputThrough) {
  Mlp<double> net("id", {2, 4, 0, 2});
  net.layers()[0].weight.value = Matrix<double>::Identity(2, 2);
  Matrix<double> x(1, 2);
  x << 1.5, -2.0;
  const auto y = net.forward(x);
  EXPECT_EQ(y(0, 0), 1.5);
  EXPECT_EQ(y(0, 1), -2.0);
}

TEST(Mlp, ZeroWeightsGiveZeroOutput) {
  Mlp<double> net("z", {3, 5, 1, 2});
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const auto y = net.forward(random_matrix<double>(1, 3, rng, 10.0));
    EXPECT_TRUE((y.array() == 0.0).all());
  }
}

TEST(Mlp, MatchesHandRolledMatrixProducts) {
  Mlp<double> net("r", {5, 16, 2, 3});
  Rng rng(11);
  net.init(rng);
  for (auto& l : net.layers()) init_uniform(l.bias, 0.5, rng);
  const auto x = random_matrix<double>(4, 5, rng);
  const auto y = net.forward(x);
  const auto layers = testutil::layers_of(net);
  for (int r = 0; r < 4; ++r) {
    const auto ref = oracle::mlp(layers, oracle::to_mat(x)[static_cast<std::size_t>(r)]);
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(y(r, c), ref[static_cast<std::size_t>(c)], 1e-6);
  }
  const auto again = net.infer(x);
  EXPECT_TRUE(again == y);
}

TEST(Mlp, RejectsWrongInputWidth) {
  Mlp<float> net("w", {3, 4, 1, 1});
  EXPECT_THROW(net.forward(Matrix<float>::Zero(1, 2)), std::invalid_argument);
  EXPECT_THROW(MlpSpec({0, 4, 1, 1}).validate(), std::invalid_argument);
}

TEST(Transformer, ZeroProjectionsAreIdentity) {
  Transformer<double> tr("t", {2, 1, 8, 0.0, 6});
  Rng rng(5);
  tr.init(rng);
  for (auto* p : tr.params()) {
    if (p->name.find("attn.proj") != std::string::npos ||
        p->name.find("mlp.out") != std::string::npos) {
      p->value.setZero();
    }
  }
  const auto x = random_matrix<double>(6, 8, rng);
  const auto y = tr.forward(x, TokenLayout::dense(1, 6));
  EXPECT_TRUE(y == x);
}

TEST(Transformer, FutureTokensDoNotAffectThePast) {
  Transformer<float> tr("t", {2, 2, 8, 0.0, 7});
  Rng rng(8);
  tr.init(rng);
  const auto layout = TokenLayout::dense(1, 7);
  const auto x = random_matrix<float>(7, 8, rng);
  const auto y = tr.forward(x, layout);
  for (int j = 0; j < 7; ++j) {
    auto x2 = x;
    x2.row(j) = random_matrix<float>(1, 8, rng, 100.0);
    const auto y2 = tr.forward(x2, layout);
    for (int i = 0; i < j; ++i) EXPECT_TRUE(y.row(i) == y2.row(i)) << "j=" << j << " i=" << i;
  }
}

TEST(Transformer, TwoTokensMatchManualAttention) {
  for (int heads : {1, 2}) {
    Transformer<double> tr("t", {1, heads, 4, 0.0, 2});
    Rng rng(21);
    tr.init(rng);
    for (auto* p : tr.params()) init_uniform(*p, 0.5, rng);
    const auto x = random_matrix<double>(2, 4, rng);
    const auto y = tr.forward(x, TokenLayout::dense(1, 2));
    const auto ref = oracle::block(testutil::block_of(tr.params(), 0), oracle::to_mat(x), {1, 1},
                                   heads);
    for (int i = 0; i < 2; ++i) {
      for (int c = 0; c < 4; ++c) {
        EXPECT_NEAR(y(i, c), ref[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)], 1e-5);
      }
    }
  }
}

TEST(Transformer, PaddedKeysAreIgnored) {
  Transformer<double> tr("t", {1, 1, 4, 0.0, 5});
  Rng rng(4);
  tr.init(rng);
  for (auto* p : tr.params()) init_uniform(*p, 0.5, rng);
  TokenLayout layout{1, 5, {0, 0, 1, 1, 1}};
  const auto x = random_matrix<double>(5, 4, rng);
  const auto y = tr.forward(x, layout);
  const auto ref = oracle::block(testutil::block_of(tr.params(), 0), oracle::to_mat(x),
                                 {0, 0, 1, 1, 1}, 1);
  for (int i = 0; i < 5; ++i) {
    for (int c = 0; c < 4; ++c) {
      EXPECT_NEAR(y(i, c), ref[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)], 1e-9);
    }
  }
  auto x2 = x;
  x2.row(0).setConstant(7.0);
  x2.row(1).setConstant(-3.0);
  const auto y2 = tr.forward(x2, layout);
  EXPECT_TRUE(y.bottomRows(3) == y2.bottomRows(3));
}

TEST(Transformer, RejectsOverlongSequence) {
  Transformer<float> tr("t", {1, 1, 4, 0.0, 3});
  EXPECT_THROW(tr.forward(Matrix<float>::Zero(4, 4), TokenLayout::dense(1, 4)),
               std::invalid_argument);
  EXPECT_THROW(TransformerSpec({1, 3, 4, 0.0, 3}).validate(), std::invalid_argument);
  EXPECT_THROW(TransformerSpec({1, 1, 4, 1.0, 3}).validate(), std::invalid_argument);
}

TEST(Transformer, EvalModeIsDeterministicAndTrainModeDrops) {
  Transformer<float> tr("t", {2, 1, 8, 0.5, 4});
  Rng rng(9);
  tr.init(rng);
  const auto x = random_matrix<float>(8, 8, rng);
  const auto layout = TokenLayout::dense(2, 4);
  const auto a = tr.forward(x, layout);
  const auto b = tr.forward(x, layout);
  EXPECT_TRUE(a == b);
  Rng d1(1);
  const auto c = tr.forward(x, layout, true, &d1);
  EXPECT_FALSE(a == c);
}

TEST(Backward, SumOfLinearOutputsGivesUnitGradients) {
  Linear<double> lin("l", 3, 2);
  Rng rng(2);
  init_uniform(lin.weight, 1.0, rng);
  Matrix<double> x = Matrix<double>::Ones(1, 3);
  Matrix<double> y;
  lin.forward(x, y);
  lin.backward(x, Matrix<double>::Ones(1, 2), nullptr);
  EXPECT_TRUE((lin.weight.grad.array() == 1.0).all());
  EXPECT_TRUE((lin.bias.grad.array() == 1.0).all());
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
  Mlp<double> net("m", {3, 8, 2, 2});
  Rng rng(6);
  net.init(rng);
  net.forward(random_matrix<double>(5, 3, rng));
  net.backward(Matrix<double>::Zero(5, 2));
  for (auto* p : net.params()) EXPECT_TRUE((p->grad.array() == 0.0).all()) << p->name;
}

TEST(Backward, InputOnlyModeLeavesParameterGradientsAlone) {
  Mlp<double> net("m", {3, 8, 2, 2});
  Rng rng(6);
  net.init(rng);
  net.forward(random_matrix<double>(5, 3, rng));
  const auto dx = net.backward(Matrix<double>::Ones(5, 2), GradMode::kInputOnly);
  EXPECT_EQ(dx.cols(), 3);
  for (auto* p : net.params()) EXPECT_TRUE((p->grad.array() == 0.0).all()) << p->name;
}

TEST(GradCheck, QuadraticLoss) {
  Param<double> p("x", {6});
  Rng rng(1);
  init_uniform(p, 2.0, rng);
  p.grad = 2.0 * p.value;
  const auto res = finite_difference_check([&] { return p.value.squaredNorm(); }, {&p});
  EXPECT_LT(res.max_rel_error, 1e-8);
  EXPECT_EQ(res.coords_checked, 6);
}

TEST(GradCheck, DetectsWrongGradient) {
  Param<double> p("x", {3});
  p.value << 1.0, 2.0, 3.0;
  p.grad = 3.0 * p.value;
  const auto res = finite_difference_check([&] { return p.value.squaredNorm(); }, {&p});
  EXPECT_GT(res.max_rel_error, 0.1);
}

TEST(GradCheck, MlpAwayFromKinks) {
  Rng rng(13);
  const auto x = random_matrix<double>(6, 4, rng);
  const auto w = random_matrix<double>(6, 3, rng);
  auto net = kink_free_mlp({4, 10, 2, 3}, x, 100);
  auto loss = [&] { return net.infer(x).cwiseProduct(w).sum(); };
  zero_grads(net.params());
  net.forward(x);
  const auto dx = net.backward(w);
  const auto res = finite_difference_check(loss, net.params(), {1e-5, 1000, 0});
  EXPECT_LT(res.max_rel_error, 1e-6) << res.worst_param;

  // Input gradient, coordinate by coordinate.
  auto xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double saved = xp.data()[i];
    xp.data()[i] = saved + 1e-5;
    const double plus = net.infer(xp).cwiseProduct(w).sum();
    xp.data()[i] = saved - 1e-5;
    const double minus = net.infer(xp).cwiseProduct(w).sum();
    xp.data()[i] = saved;
    EXPECT_NEAR(dx.data()[i], (plus - minus) / 2e-5, 1e-6);
  }
}

TEST(GradCheck, TransformerBlockFourTokens) {
  Transformer<double> tr("t", {1, 2, 6, 0.0, 4});
  Rng rng(17);
  tr.init(rng);
  for (auto* p : tr.params()) init_uniform(*p, 0.4, rng);
  const TokenLayout layout{1, 4, {0, 1, 1, 1}};
  const auto x = random_matrix<double>(4, 6, rng);
  const auto w = random_matrix<double>(4, 6, rng);
  auto loss = [&] { return tr.forward(x, layout).cwiseProduct(w).sum(); };
  zero_grads(tr.params());
  tr.forward(x, layout);
  tr.backward(w);
  const auto res = finite_difference_check(loss, tr.params(), {1e-5, 1000, 0});
  EXPECT_LT(res.max_rel_error, 1e-5) << res.worst_param;
}

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
  Param<double> p("p", {2, 3});
  Rng rng(1);
  init_uniform(p, 1.0, rng);
  const auto before = p.value;
  Adam<double> adam(OptimizerConfig::adam(0.1));
  adam.step({&p});
  EXPECT_TRUE(p.value == before);

  Adam<double> adamw(OptimizerConfig::adamw(0.1, 0.5));
  adamw.step({&p});
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    EXPECT_NEAR(p.value.data()[i], before.data()[i] * (1.0 - 0.1 * 0.5), 1e-15);
  }
}

TEST(Adam, ConstantGradientMatchesScalarRecurrence) {
  Param<double> p("p", {1});
  p.value(0, 0) = 0.7;
  Adam<double> adam(OptimizerConfig::adam(0.01));
  const auto ref = oracle::adam_trace(0.7, 0.3, 50, 0.01);
  for (int t = 0; t < 50; ++t) {
    p.grad(0, 0) = 0.3;
    adam.step({&p});
    EXPECT_NEAR(p.value(0, 0), ref[static_cast<std::size_t>(t)], 1e-10);
    EXPECT_EQ(adam.step_count(), t + 1);
  }
}

TEST(Adam, NonFiniteGradientSkipsStep) {
  Param<double> p("p", {2});
  p.value << 1.0, 2.0;
  p.grad << 0.5, std::numeric_limits<double>::quiet_NaN();
  Adam<double> adam(OptimizerConfig::adam(0.1));
  EXPECT_FALSE(adam.step({&p}));
  EXPECT_EQ(p.value(0, 0), 1.0);
  EXPECT_EQ(adam.skipped_count(), 1);
  EXPECT_EQ(adam.step_count(), 1);
  EXPECT_TRUE((p.grad.array() == 0.0).all());
}

TEST(Polyak, TargetIsExactConvexCombination) {
  Param<float> a("a", {3}), b("b", {3});
  a.value << 1.f, 2.f, 3.f;
  b.value << -1.f, 0.5f, 8.f;
  const auto old = b.value;
  polyak_update<float>({&a}, {&b}, 0.005);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(b.value(0, i), 0.005f * a.value(0, i) + 0.995f * old(0, i));
  }
}

TEST(Checkpoint, RoundTripAndErrors) {
  Mlp<float> net("net", {3, 5, 1, 2});
  Rng rng(4);
  net.init(rng);
  const auto tensors = export_params(net.params());
  const std::string bytes = encode_checkpoint(tensors);
  EXPECT_EQ(decode_checkpoint(bytes), tensors);
  EXPECT_EQ(encode_checkpoint(decode_checkpoint(bytes)), bytes);

  auto kind_of = [](const std::string& b) {
    try {
      decode_checkpoint(b);
    } catch (const CheckpointError& e) {
      return e.kind();
    }
    return CheckpointError::Kind::kIo;
  };
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_EQ(kind_of(bad), CheckpointError::Kind::kBadMagic);
  bad = bytes;
  bad[4] = 9;
  EXPECT_EQ(kind_of(bad), CheckpointError::Kind::kBadVersion);
  EXPECT_EQ(kind_of(bytes.substr(0, bytes.size() - 3)), CheckpointError::Kind::kTruncated);

  Mlp<float> other("net", {3, 6, 1, 2});
  try {
    import_params(tensors, other.params());
    FAIL() << "shape mismatch accepted";
  } catch (const CheckpointError& e) {
    EXPECT_EQ(e.kind(), CheckpointError::Kind::kShapeMismatch);
  }
  Mlp<float> renamed("other", {3, 5, 1, 2});
  try {
    import_params(tensors, renamed.params());
    FAIL() << "missing tensor accepted";
  } catch (const CheckpointError& e) {
    EXPECT_EQ(e.kind(), CheckpointError::Kind::kMissingTensor);
  }
}

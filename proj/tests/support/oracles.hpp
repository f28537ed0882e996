#pragma once

// Straight-line reference implementations used as independent oracles by
// the unit and acceptance tests. Nothing here calls into the library's
// numerical kernels; weights are read out as plain values.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // row-major, rows of equal length

/// Copies an Eigen-like row-major matrix into nested vectors.
template <typename M>
Mat to_mat(const M& m) {
  Mat out(static_cast<std::size_t>(m.rows()), Vec(static_cast<std::size_t>(m.cols())));
  for (long r = 0; r < m.rows(); ++r) {
    for (long c = 0; c < m.cols(); ++c) {
      out[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = static_cast<double>(m(r, c));
    }
  }
  return out;
}

template <typename M>
Vec to_row(const M& m) {
  Vec out;
  for (long c = 0; c < m.cols(); ++c) out.push_back(static_cast<double>(m(0, c)));
  return out;
}

/// y = x W + b for a single row, W stored in x out.
inline Vec linear(const Vec& x, const Mat& w, const Vec& b) {
  Vec y(b);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < y.size(); ++j) y[j] += x[i] * w[i][j];
  }
  return y;
}

inline Vec relu(Vec x) {
  for (double& v : x) v = v > 0.0 ? v : 0.0;
  return x;
}

struct Layer {
  Mat w;
  Vec b;
};

inline Vec mlp(const std::vector<Layer>& layers, Vec x) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    x = linear(x, layers[i].w, layers[i].b);
    if (i + 1 < layers.size()) x = relu(x);
  }
  return x;
}

inline Vec layer_norm(const Vec& x, const Vec& gain, const Vec& shift, double eps = 1e-5) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size());
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = (x[i] - mean) / std::sqrt(var + eps) * gain[i] + shift[i];
  }
  return y;
}

inline double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(std::sqrt(2.0 / M_PI) * (x + 0.044715 * x * x * x)));
}

struct Block {
  Vec ln1_g, ln1_b;
  Layer qkv, proj;
  Vec ln2_g, ln2_b;
  Layer fc, out;
};

/// Pre-norm causal decoder block over one sequence. A query sees keys
/// j <= i with valid[j]; if none is visible it sees only itself.
inline Mat block(const Block& p, const Mat& x, const std::vector<int>& valid, int heads) {
  const std::size_t L = x.size();
  const std::size_t D = x[0].size();
  const std::size_t dh = D / static_cast<std::size_t>(heads);
  Mat q(L), k(L), v(L);
  for (std::size_t i = 0; i < L; ++i) {
    const Vec qkv = linear(layer_norm(x[i], p.ln1_g, p.ln1_b), p.qkv.w, p.qkv.b);
    q[i].assign(qkv.begin(), qkv.begin() + static_cast<long>(D));
    k[i].assign(qkv.begin() + static_cast<long>(D), qkv.begin() + static_cast<long>(2 * D));
    v[i].assign(qkv.begin() + static_cast<long>(2 * D), qkv.end());
  }
  Mat y(L);
  for (std::size_t i = 0; i < L; ++i) {
    std::vector<std::size_t> keys;
    for (std::size_t j = 0; j <= i; ++j) {
      if (valid[j]) keys.push_back(j);
    }
    if (keys.empty()) keys.push_back(i);
    Vec attn(D, 0.0);
    for (int h = 0; h < heads; ++h) {
      const std::size_t off = static_cast<std::size_t>(h) * dh;
      Vec s;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j : keys) {
        double dot = 0.0;
        for (std::size_t c = 0; c < dh; ++c) dot += q[i][off + c] * k[j][off + c];
        s.push_back(dot / std::sqrt(static_cast<double>(dh)));
        mx = std::max(mx, s.back());
      }
      double z = 0.0;
      for (double& e : s) {
        e = std::exp(e - mx);
        z += e;
      }
      for (std::size_t n = 0; n < keys.size(); ++n) {
        for (std::size_t c = 0; c < dh; ++c) attn[off + c] += s[n] / z * v[keys[n]][off + c];
      }
    }
    const Vec a = linear(attn, p.proj.w, p.proj.b);
    Vec mid(D);
    for (std::size_t c = 0; c < D; ++c) mid[c] = x[i][c] + a[c];
    Vec hdn = linear(layer_norm(mid, p.ln2_g, p.ln2_b), p.fc.w, p.fc.b);
    for (double& e : hdn) e = gelu(e);
    const Vec m = linear(hdn, p.out.w, p.out.b);
    y[i].resize(D);
    for (std::size_t c = 0; c < D; ++c) y[i][c] = mid[c] + m[c];
  }
  return y;
}

/// -|| (planned - reached) / divisor ||_2, one dimension at a time.
inline double guiding_reward(const Vec& planned, const Vec& reached, const Vec& sigma) {
  double sq = 0.0;
  for (std::size_t i = 0; i < planned.size(); ++i) {
    const double div = sigma[i] < 1e-6 ? 1.0 : sigma[i];
    const double e = (planned[i] - reached[i]) / div;
    sq += e * e;
  }
  return -std::sqrt(sq);
}

/// Reverse scan: out[t] = r[t] + out[t + 1].
inline Vec suffix_sums(const Vec& r) {
  Vec out(r.size());
  double acc = 0.0;
  for (std::size_t i = r.size(); i-- > 0;) {
    acc += r[i];
    out[i] = acc;
  }
  return out;
}

/// Two-pass population standard deviation of one column.
inline double population_std(const Vec& xs) {
  double mean = 0.0;
  for (double v : xs) mean += v;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double v : xs) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

/// Scalar Adam iterated by hand; returns the parameter after each step.
inline Vec adam_trace(double x0, double g, int steps, double lr, double b1 = 0.9,
                      double b2 = 0.999, double eps = 1e-8) {
  Vec out;
  double x = x0, m = 0.0, v = 0.0;
  for (int t = 1; t <= steps; ++t) {
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    x -= lr * mh / (std::sqrt(vh) + eps);
    out.push_back(x);
  }
  return out;
}

/// log density of a = tanh(u), u ~ N(mean, exp(log_std)^2), at pre-image u.
inline double squashed_log_prob(double mean, double log_std, double u) {
  const double sd = std::exp(log_std);
  const double z = (u - mean) / sd;
  const double a = std::tanh(u);
  return -0.5 * z * z - log_std - 0.5 * std::log(2.0 * M_PI) - std::log(1.0 - a * a);
}

}  // namespace oracle

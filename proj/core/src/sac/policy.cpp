#include "afguide/sac/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace afguide::sac {

double guiding_reward(std::span<const double> planned, std::span<const double> reached,
                      std::span<const double> divisors) {
  if (planned.size() != reached.size() || planned.size() != divisors.size()) {
    throw std::invalid_argument("guiding_reward: shape mismatch");
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < planned.size(); ++i) {
    const double z = (planned[i] - reached[i]) / divisors[i];
    sq += z * z;
  }
  return -std::sqrt(sq);
}

double guiding_reward(std::span<const double> planned, std::span<const double> reached,
                      const data::NormStats& norm) {
  std::vector<double> div(norm.sigma.size());
  for (std::size_t i = 0; i < div.size(); ++i) div[i] = norm.divisor(i);
  return guiding_reward(planned, reached, div);
}

template <typename T>
T log1m_tanh_sq(T u) {
  // log(1 - tanh(u)^2) = 2 * (log 2 - u - softplus(-2u))
  const T x = T(-2) * u;
  const T softplus = x > T(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  return T(2) * (std::numbers::ln2_v<T> - u - softplus);
}

template <typename T>
SquashedSample<T> squashed_sample(const nn::Matrix<T>& actor_out, const nn::Matrix<T>& noise) {
  const auto n = actor_out.rows();
  const auto A = noise.cols();
  if (actor_out.cols() != 2 * A || noise.rows() != n) {
    throw std::invalid_argument("squashed_sample: actor output and noise shapes disagree");
  }
  SquashedSample<T> s;
  s.mean = actor_out.leftCols(A);
  const nn::Matrix<T> raw = actor_out.rightCols(A);
  s.log_std = raw.cwiseMax(T(kLogStdMin)).cwiseMin(T(kLogStdMax));
  s.clamp_mask = ((raw.array() >= T(kLogStdMin)) && (raw.array() <= T(kLogStdMax))).template cast<T>();
  s.noise = noise;
  s.pre_tanh = s.mean.array() + s.log_std.array().exp() * noise.array();
  s.action = s.pre_tanh.array().tanh();
  s.log_prob.resize(n, 1);
  const T half_log_2pi = T(0.5) * std::log(T(2) * std::numbers::pi_v<T>);
  for (Eigen::Index i = 0; i < n; ++i) {
    T lp = T(0);
    for (Eigen::Index j = 0; j < A; ++j) {
      const T e = noise(i, j);
      lp += -T(0.5) * e * e - s.log_std(i, j) - half_log_2pi - log1m_tanh_sq(s.pre_tanh(i, j));
    }
    s.log_prob(i, 0) = lp;
  }
  return s;
}

template <typename T>
nn::Matrix<T> squashed_sample_backward(const SquashedSample<T>& s, const nn::Matrix<T>& d_action,
                                       const nn::Matrix<T>& d_log_prob) {
  const auto n = s.mean.rows();
  const auto A = s.mean.cols();
  nn::Matrix<T> out(n, 2 * A);
  for (Eigen::Index i = 0; i < n; ++i) {
    const T dlp = d_log_prob(i, 0);
    for (Eigen::Index j = 0; j < A; ++j) {
      const T a = s.action(i, j);
      // d(-log(1 - tanh^2 u))/du = 2 tanh(u)
      const T du = d_action(i, j) * (T(1) - a * a) + dlp * T(2) * a;
      const T sigma = std::exp(s.log_std(i, j));
      out(i, j) = du;
      out(i, A + j) = (du * sigma * s.noise(i, j) - dlp) * s.clamp_mask(i, j);
    }
  }
  return out;
}

double squashed_log_density(double mean, double log_std, double action) {
  if (!(action > -1.0 && action < 1.0)) {
    throw std::invalid_argument("squashed_log_density: action must be inside (-1, 1)");
  }
  const double u = std::atanh(action);
  const double z = (u - mean) / std::exp(log_std);
  return -0.5 * z * z - log_std - 0.5 * std::log(2.0 * std::numbers::pi) - std::log1p(-action * action);
}

template float log1m_tanh_sq(float);
template double log1m_tanh_sq(double);
template SquashedSample<float> squashed_sample(const nn::Matrix<float>&, const nn::Matrix<float>&);
template SquashedSample<double> squashed_sample(const nn::Matrix<double>&, const nn::Matrix<double>&);
template nn::Matrix<float> squashed_sample_backward(const SquashedSample<float>&,
                                                    const nn::Matrix<float>&,
                                                    const nn::Matrix<float>&);
template nn::Matrix<double> squashed_sample_backward(const SquashedSample<double>&,
                                                     const nn::Matrix<double>&,
                                                     const nn::Matrix<double>&);

}  // namespace afguide::sac

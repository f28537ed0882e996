#pragma once

#include <span>

#include "afguide/dataset/dataset.hpp"
#include "afguide/nn/tensor.hpp"

namespace afguide::sac {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

/// -|| (planned - reached) / sigma ||_2, with flagged (near-constant)
/// dimensions divided by 1 instead of sigma.
double guiding_reward(std::span<const double> planned, std::span<const double> reached,
                      const data::NormStats& norm);
double guiding_reward(std::span<const double> planned, std::span<const double> reached,
                      std::span<const double> divisors);

/// Reparameterized tanh-Gaussian sample for a batch. `actor_out` is
/// n x 2A (means, then raw log-stds); `noise` is n x A standard normal.
template <typename T>
struct SquashedSample {
  nn::Matrix<T> mean;
  nn::Matrix<T> log_std;      // clamped
  nn::Matrix<T> clamp_mask;   // 1 where the raw log-std was inside the clamp range
  nn::Matrix<T> noise;
  nn::Matrix<T> pre_tanh;
  nn::Matrix<T> action;
  nn::Matrix<T> log_prob;     // n x 1
};

template <typename T>
SquashedSample<T> squashed_sample(const nn::Matrix<T>& actor_out, const nn::Matrix<T>& noise);

/// Gradient of a loss w.r.t. the actor output given d(loss)/d(action) and
/// d(loss)/d(log_prob) for a sample built by squashed_sample().
template <typename T>
nn::Matrix<T> squashed_sample_backward(const SquashedSample<T>& s, const nn::Matrix<T>& d_action,
                                       const nn::Matrix<T>& d_log_prob);

/// log(1 - tanh(u)^2) without cancellation.
template <typename T>
T log1m_tanh_sq(T u);

/// Density of the squashed Gaussian at an action strictly inside (-1, 1),
/// one dimension. Used for quadrature checks.
double squashed_log_density(double mean, double log_std, double action);

}  // namespace afguide::sac

#pragma once

#include <cmath>
#include <cstdint>

#include "afguide/nn/tensor.hpp"

namespace afguide::nn {

enum class OptimizerKind { kAdam, kAdamW };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // decoupled, AdamW only

  static OptimizerConfig adam(double lr) { return {OptimizerKind::kAdam, lr}; }
  static OptimizerConfig adamw(double lr, double weight_decay = 1e-4) {
    return {OptimizerKind::kAdamW, lr, 0.9, 0.999, 1e-8, weight_decay};
  }
};

/// Adam / AdamW with bias correction. The moment buffers are bound to the
/// order of the parameter list passed to step(); the list must be the same
/// on every call.
template <typename T>
class Adam {
 public:
  Adam() = default;
  explicit Adam(OptimizerConfig config) : config_(config) {}

  /// Applies one update and zeroes the gradients. A step whose gradients
  /// are not all finite is skipped (parameters untouched) and counted.
  bool step(const ParamList<T>& params) {
    ++calls_;
    if (first_.empty()) {
      for (const auto* p : params) {
        first_.push_back(Matrix<T>::Zero(p->value.rows(), p->value.cols()));
        second_.push_back(Matrix<T>::Zero(p->value.rows(), p->value.cols()));
      }
    }
    if (first_.size() != params.size()) {
      throw std::logic_error("Adam::step: parameter list changed between calls");
    }
    for (const auto* p : params) {
      if (!p->grad.allFinite()) {
        ++skipped_;
        zero_grads(params);
        return false;
      }
    }
    ++updates_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(updates_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(updates_));
    const T b1 = static_cast<T>(config_.beta1);
    const T b2 = static_cast<T>(config_.beta2);
    const T eps = static_cast<T>(config_.epsilon);
    const T step_size = static_cast<T>(config_.learning_rate / bc1);
    const T sqrt_bc2 = static_cast<T>(std::sqrt(bc2));
    const T decay = static_cast<T>(1.0 - config_.learning_rate * config_.weight_decay);
    for (std::size_t i = 0; i < params.size(); ++i) {
      Param<T>& p = *params[i];
      if (first_[i].rows() != p.value.rows() || first_[i].cols() != p.value.cols()) {
        throw std::logic_error("Adam::step: shape mismatch for " + p.name);
      }
      if (config_.kind == OptimizerKind::kAdamW && config_.weight_decay != 0.0) {
        p.value *= decay;
      }
      first_[i] = b1 * first_[i] + (T(1) - b1) * p.grad;
      second_[i] = b2 * second_[i] + (T(1) - b2) * p.grad.cwiseAbs2();
      p.value.array() -=
          step_size * first_[i].array() / (second_[i].array().sqrt() / sqrt_bc2 + eps);
      p.grad.setZero();
    }
    return true;
  }

  const OptimizerConfig& config() const { return config_; }
  /// Number of step() calls, including skipped ones.
  std::int64_t step_count() const { return calls_; }
  std::int64_t update_count() const { return updates_; }
  std::int64_t skipped_count() const { return skipped_; }

 private:
  OptimizerConfig config_;
  std::vector<Matrix<T>> first_;
  std::vector<Matrix<T>> second_;
  std::int64_t calls_ = 0;
  std::int64_t updates_ = 0;
  std::int64_t skipped_ = 0;
};

}  // namespace afguide::nn

#pragma once

#include <cmath>
#include <string>

#include "afguide/nn/tensor.hpp"

namespace afguide::nn {

/// y = x W + b with W stored in x out layout.
template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, int in_dim, int out_dim)
      : weight(name + ".weight", {static_cast<std::uint32_t>(in_dim),
                                  static_cast<std::uint32_t>(out_dim)}),
        bias(name + ".bias", {static_cast<std::uint32_t>(out_dim)}) {
    if (in_dim < 1 || out_dim < 1) {
      throw std::invalid_argument("Linear '" + name + "': dims must be >= 1");
    }
  }

  int in_dim() const { return static_cast<int>(weight.value.rows()); }
  int out_dim() const { return static_cast<int>(weight.value.cols()); }

  void forward(const Matrix<T>& x, Matrix<T>& y) const {
    if (x.cols() != weight.value.rows()) {
      throw std::invalid_argument("Linear '" + weight.name + "': expected " +
                                  std::to_string(in_dim()) + " input columns, got " +
                                  std::to_string(x.cols()));
    }
    y.noalias() = x * weight.value;
    y.rowwise() += bias.value.row(0);
  }

  /// Accumulates dW, db (unless kInputOnly) and writes dx when requested.
  void backward(const Matrix<T>& x, const Matrix<T>& dy, Matrix<T>* dx,
                GradMode mode = GradMode::kAccumulate) {
    if (mode == GradMode::kAccumulate) {
      weight.grad.noalias() += x.transpose() * dy;
      bias.grad.row(0) += dy.colwise().sum();
    }
    if (dx != nullptr) dx->noalias() = dy * weight.value.transpose();
  }

  void collect(ParamList<T>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }

  Param<T> weight;
  Param<T> bias;
};

/// Per-row layer normalization with learned gain and shift.
template <typename T>
class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(const std::string& name, int dim, double eps = 1e-5)
      : gain(name + ".gain", {static_cast<std::uint32_t>(dim)}),
        shift(name + ".shift", {static_cast<std::uint32_t>(dim)}),
        eps_(eps) {
    gain.value.setOnes();
  }

  void forward(const Matrix<T>& x, Matrix<T>& y) {
    const auto n = x.cols();
    normed_.resize(x.rows(), n);
    rstd_.resize(x.rows());
    y.resize(x.rows(), n);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const T mean = x.row(r).mean();
      const T var = (x.row(r).array() - mean).square().mean();
      const T rstd = T(1) / std::sqrt(var + static_cast<T>(eps_));
      rstd_(r) = rstd;
      normed_.row(r) = (x.row(r).array() - mean) * rstd;
      y.row(r) = normed_.row(r).cwiseProduct(gain.value.row(0)) + shift.value.row(0);
    }
  }

  /// Uses the statistics cached by the last forward().
  void backward(const Matrix<T>& dy, Matrix<T>& dx,
                GradMode mode = GradMode::kAccumulate) {
    if (mode == GradMode::kAccumulate) {
      gain.grad.row(0) += dy.cwiseProduct(normed_).colwise().sum();
      shift.grad.row(0) += dy.colwise().sum();
    }
    const auto n = static_cast<T>(dy.cols());
    dx.resize(dy.rows(), dy.cols());
    for (Eigen::Index r = 0; r < dy.rows(); ++r) {
      const auto g = dy.row(r).cwiseProduct(gain.value.row(0));
      const T mean_g = g.sum() / n;
      const T mean_gx = g.cwiseProduct(normed_.row(r)).sum() / n;
      dx.row(r) = rstd_(r) * (g.array() - mean_g - normed_.row(r).array() * mean_gx);
    }
  }

  void collect(ParamList<T>& out) {
    out.push_back(&gain);
    out.push_back(&shift);
  }

  Param<T> gain;
  Param<T> shift;

 private:
  double eps_ = 1e-5;
  Matrix<T> normed_;
  Vector<T> rstd_;
};

/// Tanh-approximated GELU as used by GPT-style feed-forward blocks.
template <typename T>
inline T gelu(T x) {
  constexpr T kC = static_cast<T>(0.7978845608028654);  // sqrt(2/pi)
  const T inner = kC * (x + static_cast<T>(0.044715) * x * x * x);
  return static_cast<T>(0.5) * x * (T(1) + std::tanh(inner));
}

template <typename T>
inline T gelu_grad(T x) {
  constexpr T kC = static_cast<T>(0.7978845608028654);
  const T x2 = x * x;
  const T inner = kC * (x + static_cast<T>(0.044715) * x2 * x);
  const T th = std::tanh(inner);
  const T sech2 = T(1) - th * th;
  return static_cast<T>(0.5) * (T(1) + th) +
         static_cast<T>(0.5) * x * sech2 * kC * (T(1) + static_cast<T>(3 * 0.044715) * x2);
}

/// Elementwise gelu over a matrix; keeps tanh(inner) for the backward pass.
template <typename T>
void gelu_forward(const Matrix<T>& x, Matrix<T>& y, Matrix<T>& th) {
  constexpr T kC = static_cast<T>(0.7978845608028654);
  const auto xa = x.array();
  th = (kC * (xa + static_cast<T>(0.044715) * xa.cube())).tanh().matrix();
  y = (static_cast<T>(0.5) * xa * (T(1) + th.array())).matrix();
}

/// dx = dy * gelu'(x), using the cached tanh from gelu_forward.
template <typename T>
void gelu_backward(const Matrix<T>& x, const Matrix<T>& th, Matrix<T>& dy) {
  constexpr T kC = static_cast<T>(0.7978845608028654);
  const auto xa = x.array();
  const auto ta = th.array();
  dy.array() *= static_cast<T>(0.5) * (T(1) + ta) +
                static_cast<T>(0.5) * xa * (T(1) - ta.square()) * kC *
                    (T(1) + static_cast<T>(3 * 0.044715) * xa.square());
}

}  // namespace afguide::nn

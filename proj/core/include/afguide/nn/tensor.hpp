#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "afguide/rng.hpp"

namespace afguide::nn {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using Shape = std::vector<std::uint32_t>;

/// A named learnable tensor. Values are stored as a row-major matrix: a 1-D
/// shape {n} maps to 1 x n, a 2-D shape {r, c} to r x c.
template <typename T>
struct Param {
  std::string name;
  Shape shape;
  Matrix<T> value;
  Matrix<T> grad;

  Param() = default;
  Param(std::string n, Shape s) : name(std::move(n)), shape(std::move(s)) {
    if (shape.empty() || shape.size() > 2) {
      throw std::invalid_argument("param '" + name + "': rank must be 1 or 2");
    }
    const auto rows = shape.size() == 1 ? 1 : static_cast<Eigen::Index>(shape[0]);
    const auto cols = static_cast<Eigen::Index>(shape.back());
    value = Matrix<T>::Zero(rows, cols);
    grad = Matrix<T>::Zero(rows, cols);
  }

  Eigen::Index size() const { return value.size(); }
  void zero_grad() { grad.setZero(); }
};

template <typename T>
using ParamList = std::vector<Param<T>*>;

/// Whether a backward pass accumulates parameter gradients or only
/// propagates the input gradient.
enum class GradMode { kAccumulate, kInputOnly };

template <typename T>
void zero_grads(const ParamList<T>& params) {
  for (auto* p : params) p->zero_grad();
}

template <typename T>
std::size_t count_values(const ParamList<T>& params) {
  return std::accumulate(params.begin(), params.end(), std::size_t{0},
                         [](std::size_t acc, const Param<T>* p) {
                           return acc + static_cast<std::size_t>(p->size());
                         });
}

/// Truncated normal at +-2 std, by rejection.
template <typename T>
void init_trunc_normal(Param<T>& p, double stddev, Rng& rng) {
  for (Eigen::Index i = 0; i < p.value.size(); ++i) {
    double z = rng.normal();
    while (std::abs(z) > 2.0) z = rng.normal();
    p.value.data()[i] = static_cast<T>(z * stddev);
  }
}

template <typename T>
void init_uniform(Param<T>& p, double bound, Rng& rng) {
  for (Eigen::Index i = 0; i < p.value.size(); ++i) {
    p.value.data()[i] = static_cast<T>(rng.uniform(-bound, bound));
  }
}

/// dst <- tau * src + (1 - tau) * dst, element-wise over matching lists.
template <typename T>
void polyak_update(const ParamList<T>& src, const ParamList<T>& dst, double tau) {
  if (src.size() != dst.size()) {
    throw std::invalid_argument("polyak_update: parameter list size mismatch");
  }
  const T t = static_cast<T>(tau);
  const T keep = static_cast<T>(1.0 - tau);
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i]->value = t * src[i]->value + keep * dst[i]->value;
  }
}

template <typename T>
void copy_values(const ParamList<T>& src, const ParamList<T>& dst) {
  if (src.size() != dst.size()) {
    throw std::invalid_argument("copy_values: parameter list size mismatch");
  }
  for (std::size_t i = 0; i < src.size(); ++i) dst[i]->value = src[i]->value;
}

/// Copies values between models of different scalar types with the same
/// parameter layout (e.g. a float training model and its double twin).
template <typename To, typename From>
void convert_values(const ParamList<From>& src, const ParamList<To>& dst) {
  if (src.size() != dst.size()) {
    throw std::invalid_argument("convert_values: parameter list size mismatch");
  }
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i]->shape != dst[i]->shape) {
      throw std::invalid_argument("convert_values: shape mismatch for " + src[i]->name);
    }
    dst[i]->value = src[i]->value.template cast<To>();
  }
}

template <typename T>
bool all_finite(const Matrix<T>& m) {
  return m.allFinite();
}

}  // namespace afguide::nn

#pragma once

#include <limits>
#include <string>
#include <vector>

#include "afguide/nn/layers.hpp"

namespace afguide::nn {

struct MlpSpec {
  int input_dim = 1;
  int hidden_dim = 256;
  int n_hidden_layers = 2;
  int output_dim = 1;

  void validate() const {
    if (input_dim < 1 || hidden_dim < 1 || output_dim < 1 || n_hidden_layers < 0) {
      throw std::invalid_argument("MlpSpec: all dims must be >= 1");
    }
  }
  bool operator==(const MlpSpec&) const = default;
};

/// Fully-connected network with ReLU between layers and a linear output.
/// forward() caches activations for the following backward().
template <typename T>
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::string& name, const MlpSpec& spec) : spec_(spec) {
    spec.validate();
    int in = spec.input_dim;
    for (int i = 0; i < spec.n_hidden_layers; ++i) {
      layers_.emplace_back(name + ".l" + std::to_string(i), in, spec.hidden_dim);
      in = spec.hidden_dim;
    }
    layers_.emplace_back(name + ".l" + std::to_string(spec.n_hidden_layers), in,
                         spec.output_dim);
  }

  const MlpSpec& spec() const { return spec_; }

  /// Uniform(+-1/sqrt(fan_in)) weights, zero biases.
  void init(Rng& rng) {
    for (auto& layer : layers_) {
      init_uniform(layer.weight, 1.0 / std::sqrt(static_cast<double>(layer.in_dim())), rng);
      layer.bias.value.setZero();
    }
  }

  const Matrix<T>& forward(const Matrix<T>& x) {
    check_input(x);
    acts_.resize(layers_.size() + 1);
    acts_[0] = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      layers_[i].forward(acts_[i], acts_[i + 1]);
      if (i + 1 < layers_.size()) acts_[i + 1] = acts_[i + 1].cwiseMax(T(0));
    }
    return acts_.back();
  }

  /// Forward pass without touching the backward cache.
  Matrix<T> infer(const Matrix<T>& x) const {
    check_input(x);
    Matrix<T> cur = x;
    Matrix<T> next;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      layers_[i].forward(cur, next);
      if (i + 1 < layers_.size()) next = next.cwiseMax(T(0));
      cur.swap(next);
    }
    return cur;
  }

  /// Backpropagates dy through the last forward(); returns d(input).
  Matrix<T> backward(const Matrix<T>& dy, GradMode mode = GradMode::kAccumulate) {
    if (acts_.size() != layers_.size() + 1) {
      throw std::logic_error("Mlp::backward called without forward");
    }
    Matrix<T> grad = dy;
    Matrix<T> dx;
    for (std::size_t i = layers_.size(); i-- > 0;) {
      if (i + 1 < layers_.size()) {
        grad = (acts_[i + 1].array() > T(0)).select(grad, T(0));
      }
      layers_[i].backward(acts_[i], grad, &dx, mode);
      grad.swap(dx);
    }
    return grad;
  }

  /// Pre-activations of the hidden layers for the last forward(). Used by
  /// gradient checks to avoid ReLU kinks.
  Matrix<T> min_abs_preactivation(const Matrix<T>& x) const {
    check_input(x);
    Matrix<T> cur = x;
    Matrix<T> next;
    Matrix<T> out = Matrix<T>::Constant(x.rows(), 1, std::numeric_limits<T>::infinity());
    for (std::size_t i = 0; i + 1 < layers_.size(); ++i) {
      layers_[i].forward(cur, next);
      out = out.cwiseMin(next.cwiseAbs().rowwise().minCoeff());
      cur = next.cwiseMax(T(0));
    }
    return out;
  }

  ParamList<T> params() {
    ParamList<T> out;
    for (auto& layer : layers_) layer.collect(out);
    return out;
  }

  std::vector<Linear<T>>& layers() { return layers_; }
  const std::vector<Linear<T>>& layers() const { return layers_; }

 private:
  void check_input(const Matrix<T>& x) const {
    if (x.cols() != spec_.input_dim) {
      throw std::invalid_argument("Mlp: expected input dim " + std::to_string(spec_.input_dim) +
                                  ", got " + std::to_string(x.cols()));
    }
  }

  MlpSpec spec_;
  std::vector<Linear<T>> layers_;
  std::vector<Matrix<T>> acts_;
};

}  // namespace afguide::nn

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "afguide/nn/tensor.hpp"

namespace afguide::nn {

struct GradCheckOptions {
  double epsilon = 1e-5;
  // Coordinates sampled per parameter tensor; tensors smaller than this
  // are checked exhaustively.
  int coords_per_param = 24;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  int coords_checked = 0;
};

/// Compares the gradients already stored in `params` against central
/// differences of `loss`. Error metric per coordinate:
/// |analytic - numeric| / max(1, |analytic|). Runs in double precision.
inline GradCheckResult finite_difference_check(const std::function<double()>& loss,
                                               const ParamList<double>& params,
                                               const GradCheckOptions& options = {}) {
  GradCheckResult result;
  Rng rng(options.seed);
  for (Param<double>* p : params) {
    const auto n = p->value.size();
    std::vector<Eigen::Index> coords;
    if (n <= options.coords_per_param) {
      for (Eigen::Index i = 0; i < n; ++i) coords.push_back(i);
    } else {
      for (int c = 0; c < options.coords_per_param; ++c) {
        coords.push_back(static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(n))));
      }
    }
    for (const Eigen::Index i : coords) {
      double& x = p->value.data()[i];
      const double saved = x;
      x = saved + options.epsilon;
      const double plus = loss();
      x = saved - options.epsilon;
      const double minus = loss();
      x = saved;
      const double numeric = (plus - minus) / (2.0 * options.epsilon);
      const double analytic = p->grad.data()[i];
      const double err = std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
      ++result.coords_checked;
      if (err > result.max_rel_error || !std::isfinite(err)) {
        result.max_rel_error = std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
        result.worst_param = p->name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

}  // namespace afguide::nn

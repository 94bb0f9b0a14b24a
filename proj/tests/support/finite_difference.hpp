// SPDX-License-Identifier: Apache-2.0
// Central finite-difference oracle. Independent of the backward rules it checks:
// it only evaluates the forward function.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "xlsts/rng.hpp"
#include "xlsts/tensor.hpp"

namespace xlsts::testing {

// Relative error with an absolute floor on the denominator, so entries whose
// true gradient is ~0 are judged by absolute error instead of noise ratios.
inline double relative_error(double analytic, double numeric, double floor = 1e-4) {
  return std::fabs(analytic - numeric) / std::max({std::fabs(analytic), std::fabs(numeric), floor});
}

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
};

// Compares backward() of loss_fn() against central differences for every
// element of every tensor in `inputs` (all must be leaves).
inline GradCheckResult check_gradients(const std::function<Tensor()>& loss_fn, std::vector<Tensor> inputs,
                                       double step = 1e-5) {
  for (auto& t : inputs) t.zero_grad();
  loss_fn().backward();
  std::vector<std::vector<double>> analytic;
  for (auto& t : inputs) {
    auto g = t.grad();
    analytic.emplace_back(g.begin(), g.end());
  }

  GradCheckResult result;
  NoGradGuard no_grad;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto values = inputs[k].mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double plus = loss_fn().item();
      values[i] = saved - step;
      const double minus = loss_fn().item();
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      result.max_relative_error = std::max(result.max_relative_error, relative_error(analytic[k][i], numeric));
      ++result.checked;
    }
  }
  return result;
}

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0, bool requires_grad = true) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

}  // namespace xlsts::testing

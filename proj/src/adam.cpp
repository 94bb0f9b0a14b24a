// SPDX-License-Identifier: Apache-2.0
#include "xlsts/adam.hpp"

#include <cmath>

#include "xlsts/errors.hpp"

namespace xlsts {

void adam_step(std::span<NamedTensor> params, AdamState& state) {
  if (state.step < 0) throw ContractError("adam step counter is negative");
  if (state.config.learning_rate <= 0.0) throw ContractError("adam learning rate must be positive");
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.tensor.numel(), 0.0);
      state.second_moment.emplace_back(p.tensor.numel(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) throw DimensionError("adam state does not match parameter list");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (state.first_moment[k].size() != params[k].tensor.numel()) {
      throw DimensionError("adam moment buffer shape mismatch for " + params[k].name);
    }
    if (params[k].tensor.has_grad() && !all_finite(params[k].tensor.grad())) {
      throw NumericError("non-finite gradient for parameter " + params[k].name);
    }
  }

  const auto& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    auto values = params[k].tensor.mutable_values();
    const bool has_grad = params[k].tensor.has_grad();
    const auto grad = has_grad ? params[k].tensor.grad() : std::span<const double>{};
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = has_grad ? grad[i] : 0.0;
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      values[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

Adam::Adam(std::vector<NamedTensor> params, AdamConfig config) : params_(std::move(params)) {
  state_.config = config;
}

void Adam::step() { adam_step(params_, state_); }

void Adam::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

}  // namespace xlsts

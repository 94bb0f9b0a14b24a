// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xlsts/tensor.hpp"

namespace xlsts {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;
};

struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

// One bias-corrected Adam update of every parameter from its accumulated
// gradient (absent gradient counts as zero). Throws NumericError naming the
// parameter when a gradient is not finite; nothing is modified in that case.
void adam_step(std::span<NamedTensor> params, AdamState& state);

class Adam {
 public:
  Adam(std::vector<NamedTensor> params, AdamConfig config);

  void step();
  void zero_grad();
  void set_learning_rate(double lr) { state_.config.learning_rate = lr; }
  const AdamState& state() const { return state_; }
  std::span<const NamedTensor> parameters() const { return params_; }

 private:
  std::vector<NamedTensor> params_;
  AdamState state_;
};

}  // namespace xlsts

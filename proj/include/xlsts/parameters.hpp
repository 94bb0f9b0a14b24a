// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "xlsts/adam.hpp"
#include "xlsts/rng.hpp"
#include "xlsts/tensor.hpp"

namespace xlsts {

// Named trainable tensors in registration order.
class ParameterSet {
 public:
  // Throws ContractError on a duplicate name.
  Tensor add(std::string name, Tensor tensor);
  // Uniform(-a, a), a = sqrt(6 / (fan_in + fan_out)), shape [fan_in x fan_out].
  Tensor xavier(std::string name, std::size_t fan_in, std::size_t fan_out, Rng& rng);
  Tensor normal(std::string name, Shape shape, double stddev, Rng& rng);
  Tensor constant(std::string name, Shape shape, double value);

  bool contains(std::string_view name) const;
  // Throws ContractError when absent.
  Tensor get(std::string_view name) const;
  const std::vector<NamedTensor>& entries() const { return entries_; }
  std::vector<NamedTensor> with_prefix(std::string_view prefix) const;
  std::size_t size() const { return entries_.size(); }
  std::size_t total_values() const;

 private:
  std::vector<NamedTensor> entries_;
};

struct Linear {
  Tensor weight;  // [in x out]
  Tensor bias;    // [out]

  static Linear create(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, Rng& rng);
  Tensor operator()(const Tensor& x) const;
};

struct LayerNorm {
  Tensor gamma;
  Tensor beta;

  static LayerNorm create(ParameterSet& params, const std::string& name, std::size_t width);
  Tensor operator()(const Tensor& x) const;
};

}  // namespace xlsts

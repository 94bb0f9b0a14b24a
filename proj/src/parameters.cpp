// SPDX-License-Identifier: Apache-2.0
#include "xlsts/parameters.hpp"

#include <cmath>

#include "xlsts/errors.hpp"
#include "xlsts/ops.hpp"

namespace xlsts {

Tensor ParameterSet::add(std::string name, Tensor tensor) {
  if (contains(name)) throw ContractError("duplicate parameter name '" + name + "'");
  tensor.set_requires_grad(true);
  entries_.push_back({std::move(name), tensor});
  return tensor;
}

Tensor ParameterSet::xavier(std::string name, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> v(fan_in * fan_out);
  for (auto& x : v) x = rng.uniform(-a, a);
  return add(std::move(name), Tensor({fan_in, fan_out}, std::move(v)));
}

Tensor ParameterSet::normal(std::string name, Shape shape, double stddev, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = stddev * rng.normal();
  return add(std::move(name), Tensor(std::move(shape), std::move(v)));
}

Tensor ParameterSet::constant(std::string name, Shape shape, double value) {
  return add(std::move(name), Tensor::full(std::move(shape), value));
}

bool ParameterSet::contains(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return true;
  }
  return false;
}

Tensor ParameterSet::get(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.tensor;
  }
  throw ContractError("no parameter named '" + std::string(name) + "'");
}

std::vector<NamedTensor> ParameterSet::with_prefix(std::string_view prefix) const {
  std::vector<NamedTensor> out;
  for (const auto& e : entries_) {
    if (e.name.starts_with(prefix)) out.push_back(e);
  }
  return out;
}

std::size_t ParameterSet::total_values() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.numel();
  return n;
}

Linear Linear::create(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
  Linear l;
  l.weight = params.xavier(name + ".weight", in, out, rng);
  l.bias = params.constant(name + ".bias", {out}, 0.0);
  return l;
}

Tensor Linear::operator()(const Tensor& x) const { return add(matmul(x, weight), bias); }

LayerNorm LayerNorm::create(ParameterSet& params, const std::string& name, std::size_t width) {
  LayerNorm ln;
  ln.gamma = params.constant(name + ".gamma", {width}, 1.0);
  ln.beta = params.constant(name + ".beta", {width}, 0.0);
  return ln;
}

Tensor LayerNorm::operator()(const Tensor& x) const { return layer_norm(x, gamma, beta); }

}  // namespace xlsts

// SPDX-License-Identifier: Apache-2.0
#include "xlsts/ensemble.hpp"

#include <cmath>

#include "xlsts/errors.hpp"
#include "xlsts/ops.hpp"

namespace xlsts {

EnsembleWeights EnsembleWeights::learnable(std::size_t languages) {
  if (languages == 0) throw ConfigError("ensemble over zero languages");
  EnsembleWeights w;
  w.learnable_ = true;
  w.size_ = languages;
  w.logits_ = Tensor::zeros({1, languages}, true);
  return w;
}

EnsembleWeights EnsembleWeights::fixed(std::vector<double> beta) {
  if (beta.empty()) throw ConfigError("ensemble over zero languages");
  double total = 0.0;
  for (double b : beta) {
    if (!std::isfinite(b) || b < 0.0) throw ConfigError("ensemble weights must be finite and nonnegative");
    total += b;
  }
  if (!(total > 0.0)) throw ConfigError("ensemble weights must not all be zero");
  for (double& b : beta) b /= total;
  EnsembleWeights w;
  w.size_ = beta.size();
  w.fixed_ = Tensor({1, w.size_}, std::move(beta));
  return w;
}

EnsembleWeights EnsembleWeights::one_hot(std::size_t languages, std::size_t index) {
  if (index >= languages) throw ConfigError("one-hot index out of range");
  std::vector<double> beta(languages, 0.0);
  beta[index] = 1.0;
  return fixed(std::move(beta));
}

Tensor EnsembleWeights::beta() const {
  if (size_ == 0) throw ContractError("use of empty ensemble weights");
  return learnable_ ? softmax(logits_, 1) : fixed_;
}

std::vector<double> EnsembleWeights::values() const {
  NoGradGuard no_grad;
  const auto b = beta();
  return {b.values().begin(), b.values().end()};
}

std::vector<NamedTensor> EnsembleWeights::parameters() const {
  if (!learnable_) return {};
  return {{"ensemble.beta_logits", logits_}};
}

std::vector<Tensor> multilingual_encode(const Translator& model, const TokenizerSet& tokenizers,
                                        std::string_view sentence, std::span<const std::string> languages) {
  const auto ids = tokenizers.subword_ids(sentence);
  std::vector<Tensor> out;
  for (const auto& lang : languages) {
    out.push_back(model.encode(tokenizers.with_target(ids, tokenizers.language_index(lang)).ids));
  }
  return out;
}

Tensor ensemble_predict(std::span<const Tensor> distributions, const EnsembleWeights& weights) {
  if (distributions.size() != weights.size()) {
    throw DimensionError("ensemble has " + std::to_string(weights.size()) + " weights for " +
                         std::to_string(distributions.size()) + " distributions");
  }
  std::vector<Tensor> rows;
  for (const auto& d : distributions) rows.push_back(reshape(d, {1, d.numel()}));
  return matmul(weights.beta(), concat_rows(rows));
}

}  // namespace xlsts

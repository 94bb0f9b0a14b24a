// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xlsts/adam.hpp"
#include "xlsts/tokenizer.hpp"
#include "xlsts/translator.hpp"

namespace xlsts {

// Convex weights over languages: softmax of trainable logits, or a fixed vector.
class EnsembleWeights {
 public:
  EnsembleWeights() = default;
  // Zero logits, so beta starts uniform.
  static EnsembleWeights learnable(std::size_t languages);
  // Normalized to sum 1. Throws ConfigError for negative, non-finite or all-zero weights.
  static EnsembleWeights fixed(std::vector<double> beta);
  // beta_i = 1 for language i, 0 elsewhere.
  static EnsembleWeights one_hot(std::size_t languages, std::size_t index);

  bool is_learnable() const { return learnable_; }
  std::size_t size() const { return size_; }
  // [1 x n]
  Tensor beta() const;
  std::vector<double> values() const;
  // Trainable logits; empty when fixed.
  std::vector<NamedTensor> parameters() const;
  Tensor logits() const { return logits_; }

 private:
  bool learnable_ = false;
  std::size_t size_ = 0;
  Tensor logits_;
  Tensor fixed_;
};

// Encodes [<2lang>] ++ subwords ++ [</s>] once per language; entry i belongs to languages[i].
std::vector<Tensor> multilingual_encode(const Translator& model, const TokenizerSet& tokenizers,
                                        std::string_view sentence, std::span<const std::string> languages);

// sum_i beta_i p_i over per-language [1 x (K + 1)] distributions.
Tensor ensemble_predict(std::span<const Tensor> distributions, const EnsembleWeights& weights);

}  // namespace xlsts

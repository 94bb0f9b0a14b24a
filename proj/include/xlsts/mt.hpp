// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "xlsts/rng.hpp"
#include "xlsts/tokenizer.hpp"
#include "xlsts/translator.hpp"

namespace xlsts {

struct Direction {
  int source = 0;
  int target = 0;

  bool is_self() const { return source == target; }
  bool operator==(const Direction&) const = default;
};

// Cross-language pairs in lexicographic order, then self pairs. For two
// languages: (0,1), (1,0), (0,0), (1,1).
std::vector<Direction> translation_directions(std::size_t num_languages);
std::string direction_name(const Direction& d, std::span<const std::string> languages);

// Nonnegative per-direction weights, normalized to sum 1 at construction.
class MtLossWeights {
 public:
  MtLossWeights() = default;
  // Throws ConfigError for a negative or non-finite weight or an all-zero vector.
  explicit MtLossWeights(std::vector<double> lambda);
  static MtLossWeights uniform(std::size_t directions);

  std::size_t size() const { return lambda_.size(); }
  double operator[](std::size_t i) const { return lambda_.at(i); }
  const std::vector<double>& values() const { return lambda_; }

 private:
  std::vector<double> lambda_;
};

struct NoiseConfig {
  double drop_prob = 0.1;
  std::size_t swap_window = 3;

  // Throws ConfigError unless drop_prob in [0, 1).
  void validate() const;
};

// Word dropout then local shuffle over units (each unit a run of ids): each
// unit is dropped with drop_prob (at least one always survives), then unit i
// moves to the position ranked by key i + U[0, swap_window + 1).
std::vector<std::vector<int>> corrupt_units(std::vector<std::vector<int>> units, const NoiseConfig& noise, Rng& rng);

// Corrupts the interior of an encoder-side sentence. Words are delimited by
// `is_word_end`; the leading language token and the final EOS are kept as is.
TokenizedSentence denoise(const TokenizedSentence& sentence, const NoiseConfig& noise, Rng& rng,
                          const std::function<bool(int)>& is_word_end);
// Every id is its own word.
TokenizedSentence denoise(const TokenizedSentence& sentence, const NoiseConfig& noise, Rng& rng);

struct TranslationExample {
  TokenizedSentence source;
  std::vector<int> target;  // decoder-side ids of the target language, no BOS/EOS
  std::size_t direction = 0;
};

struct MtLoss {
  Tensor total;
  std::vector<double> per_direction;          // mean token cross-entropy, 0 when not evaluated
  std::vector<std::size_t> tokens_per_direction;
};

// Sum over directions of lambda_i times the mean token cross-entropy of the
// direction's examples (decoder input BOS ++ target, output target ++ EOS).
// Directions with zero weight or no examples contribute 0 and are not run.
// Throws NumericError when the loss is not finite.
MtLoss mt_loss(const Translator& model, std::span<const TranslationExample> batch, const MtLossWeights& weights,
               std::span<const Direction> directions, double label_smoothing = 0.0);

}  // namespace xlsts

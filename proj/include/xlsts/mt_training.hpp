// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "xlsts/adam.hpp"
#include "xlsts/data.hpp"
#include "xlsts/mt.hpp"
#include "xlsts/tokenizer.hpp"
#include "xlsts/translator.hpp"

namespace xlsts {

struct MtTrainingSettings {
  std::size_t steps = 2000;
  std::size_t batch_tokens = 512;
  double learning_rate = 3e-4;
  double label_smoothing = 0.0;
  std::size_t log_every = 100;
};

// Tokenized parallel data. Sentence i of language l is sides[l][i].
struct MtCorpus {
  std::vector<std::vector<std::vector<int>>> encoder_ids;  // [language][pair] subword ids, no specials
  std::vector<std::vector<std::vector<int>>> decoder_ids;  // [language][pair]
  std::vector<std::vector<std::string>> text;              // [language][pair] raw sentences

  std::size_t size() const { return text.empty() ? 0 : text.front().size(); }
};

// Two-language corpus from source/target pairs (languages 0 and 1).
// Throws DataError when a sentence does not fit max_len or tokenizes to nothing.
MtCorpus build_mt_corpus(const TokenizerSet& tokenizers, const std::vector<ParallelPair>& pairs, std::size_t max_len);

// Draws examples until the next one would exceed batch_tokens (source + target
// + 1 per example); at least one example. Direction i is picked with
// probability lambda_i, so zero-weight directions never appear. Self
// directions get a freshly noised source.
std::vector<TranslationExample> sample_mt_batch(const MtCorpus& corpus, const TokenizerSet& tokenizers,
                                                std::span<const Direction> directions, const MtLossWeights& weights,
                                                const NoiseConfig& noise, std::size_t batch_tokens, Rng& rng);

struct MtStepLog {
  std::size_t step = 0;
  double total = 0.0;
  std::vector<double> per_direction;
};

struct MtTrainingReport {
  std::vector<std::string> direction_names;
  std::vector<MtStepLog> steps;  // one entry per optimizer step
};

// Optimizes the weighted translation loss for settings.steps Adam updates.
// `on_log` (optional) sees every log_every-th step.
MtTrainingReport train_translator(Translator& model, const TokenizerSet& tokenizers, const MtCorpus& corpus,
                                  const MtLossWeights& weights, const NoiseConfig& noise,
                                  const MtTrainingSettings& settings, std::uint64_t seed,
                                  const std::function<void(const MtStepLog&)>& on_log = {});

// Greedy translations of corpus[source] into `direction.target`, scored against
// corpus[target] text. `limit` 0 means every pair.
double evaluate_direction_bleu(const Translator& model, const TokenizerSet& tokenizers, const MtCorpus& corpus,
                               const Direction& direction, std::size_t limit = 0);

}  // namespace xlsts

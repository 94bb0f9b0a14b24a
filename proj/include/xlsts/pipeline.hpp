// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "xlsts/checkpoint.hpp"
#include "xlsts/config.hpp"
#include "xlsts/data.hpp"
#include "xlsts/mt_training.hpp"
#include "xlsts/sts_model.hpp"

namespace xlsts {

// Per-language sentence lists of a two-language parallel corpus.
std::vector<std::vector<std::string>> parallel_sides(const std::vector<ParallelPair>& pairs);

// Tokenizers learned on both sides of the corpus.
TokenizerSet train_tokenizers(const RunConfig& config, const std::vector<ParallelPair>& pairs);

// Seeded carve-out of round(fraction * n) pairs; fraction 0 keeps everything for training.
std::pair<std::vector<ParallelPair>, std::vector<ParallelPair>> split_parallel(std::vector<ParallelPair> pairs,
                                                                               double fraction, std::uint64_t seed);

struct PretrainResult {
  TokenizerSet tokenizers;
  Translator translator;
  MtTrainingReport report;
  nlohmann::json summary;  // loss curves and BLEU per direction
};

// Trains tokenizers and the translator on `train`; BLEU is reported on the
// training slice and, when nonempty, on `heldout`.
PretrainResult pretrain_mt(const RunConfig& config, const std::vector<ParallelPair>& train,
                           const std::vector<ParallelPair>& heldout,
                           const std::function<void(const MtStepLog&)>& on_log = {});

// Untrained translator sized for the tokenizers, seeded from config.
Translator fresh_translator(const RunConfig& config, const TokenizerSet& tokenizers);
Translator translator_from_checkpoint(const Checkpoint& checkpoint);

// The config an STS run actually uses: languages, tokenizer and transformer
// settings come from the mt-stage checkpoint.
RunConfig sts_config_from(const RunConfig& config, const Checkpoint& mt_checkpoint);

struct StsRunResult {
  StsModel model;
  StsTrainingReport report;
  RunConfig config;  // effective
  nlohmann::json summary;
};

// Requires an mt-stage checkpoint. `dev` empty and sts.dev_fraction > 0 carves
// a dev split out of `train`; otherwise an empty dev is a ConfigError.
StsRunResult run_sts_training(const RunConfig& config, const Checkpoint& mt_checkpoint,
                              std::vector<StsExample> train, std::vector<StsExample> dev,
                              const StsTrainingOptions& options = {});

// Requires an sts-stage checkpoint.
StsModel sts_model_from_checkpoint(const Checkpoint& checkpoint);

nlohmann::json report_json(const StsTrainingReport& report);

struct ScoredPair {
  double rating = 0.0;
  std::vector<double> distribution;
  double latency_ms = 0.0;
};

// `only` restricts scoring to one language view. Unknown languages throw ConfigError.
std::vector<ScoredPair> score_examples(const StsModel& model, const std::vector<StsExample>& examples,
                                       const std::string& default_language,
                                       std::optional<std::string> only = std::nullopt);

struct AblationCell {
  std::string data;  // rich-only | low-only | both | both+multilingual
  bool pretrained = false;
  RunConfig config;
  double dev_metric = 0.0;
  double test_metric = 0.0;
  std::size_t best_step = 0;
};

struct AblationReport {
  std::string metric;
  std::vector<AblationCell> cells;
  nlohmann::json to_json() const;
};

// Eight cells: {rich-only, low-only, both, both+multilingual} x {w/o pretrained,
// pretrained}, scored on the low-resource test set. The pretrained cells start
// from mt_checkpoint; the others from a randomly initialized encoder with the
// same tokenizers.
AblationReport run_ablation(const RunConfig& config, const Checkpoint& mt_checkpoint,
                            const std::vector<StsExample>& rich_train, const std::vector<StsExample>& low_train,
                            std::vector<StsExample> low_dev, const std::vector<StsExample>& low_test,
                            const std::function<void(const AblationCell&)>& on_cell = {});

}  // namespace xlsts

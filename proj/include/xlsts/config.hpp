// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "xlsts/mt.hpp"
#include "xlsts/mt_training.hpp"
#include "xlsts/sts.hpp"
#include "xlsts/tokenizer.hpp"
#include "xlsts/translator.hpp"

namespace xlsts {

enum class BetaMode { kLearnable, kFixed };

struct StsTrainingSettings {
  StsConfig head;
  std::string language;                      // language of the labeled data; default: first language
  std::size_t unfreeze_last_n = 0;           // top encoder layers trained with the head
  bool ensemble = true;                      // one view per ensemble language
  std::vector<std::string> ensemble_languages;  // empty means every configured language
  BetaMode beta_mode = BetaMode::kLearnable;
  std::vector<double> beta;                  // used when beta_mode is fixed
  std::size_t steps = 3000;
  std::size_t batch_size = 16;
  double learning_rate = 3e-4;
  std::size_t eval_every = 100;
  double dev_fraction = 0.2;                 // carve-out when no dev file is given; 0 disables
  std::string metric;                        // pearson | auc; empty picks auc for max_level 1, else pearson
};

struct DataPaths {
  std::string parallel;
  std::string parallel_heldout;  // optional; otherwise mt.heldout_fraction is carved out
  std::string sts_train;
  std::string sts_dev;
  std::string sts_test;
  std::string vectors;
};

struct AblationSettings {
  std::string rich_language = "en";
  std::string low_language = "es";
  std::string rich_train;
  std::string low_train;
  std::string low_dev;
  std::string low_test;
  std::size_t sts_steps = 0;  // 0 keeps sts.steps
};

struct RunConfig {
  std::vector<std::string> languages{"en", "es"};
  std::uint64_t seed = 1;
  TokenizerSettings tokenizer;
  TransformerConfig transformer;
  std::vector<double> mt_lambda;  // empty means uniform
  MtTrainingSettings mt;
  double mt_heldout_fraction = 0.1;
  NoiseConfig noise;
  StsTrainingSettings sts;
  DataPaths paths;
  AblationSettings ablation;

  // Throws ConfigError on any inconsistency.
  void validate() const;
  MtLossWeights loss_weights() const;
  // Language whose view carries the labeled data.
  std::string sts_language() const;
  std::vector<std::string> view_languages() const;
  std::string sts_metric() const;
};

// Throws ConfigError on unknown keys, wrong types, or invalid values. Missing keys keep defaults.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& config);
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace xlsts

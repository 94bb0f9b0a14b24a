// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xlsts/config.hpp"
#include "xlsts/data.hpp"
#include "xlsts/ensemble.hpp"
#include "xlsts/sts.hpp"
#include "xlsts/tokenizer.hpp"
#include "xlsts/translator.hpp"

namespace xlsts {

// Shared encoder + matching head + ensemble weights.
class StsModel {
 public:
  // With ensemble on, every example is viewed under each of view_languages and
  // combined with `weights`; off, only under the example's own language.
  StsModel(Translator translator, TokenizerSet tokenizers, StsConfig head_config,
           std::vector<std::string> view_languages, bool ensemble, EnsembleWeights weights, std::uint64_t seed);

  const Translator& translator() const { return translator_; }
  Translator& translator() { return translator_; }
  const TokenizerSet& tokenizers() const { return tokenizers_; }
  const StsHead& head() const { return head_; }
  StsHead& head() { return head_; }
  const EnsembleWeights& weights() const { return weights_; }
  const std::vector<std::string>& view_languages() const { return view_languages_; }
  bool ensemble() const { return ensemble_; }
  std::size_t max_level() const { return head_.config().max_level; }

  // Translator, head and ensemble parameters, in that order.
  std::vector<NamedTensor> all_parameters() const;

  // Encoder states for [<2language>] ++ sentence ++ [</s>].
  Tensor encode(std::string_view sentence, std::string_view language) const;

  // [1 x (K + 1)] rating distribution. `language` is the example's own
  // language, used when the ensemble is off. `only` restricts the prediction to
  // one view regardless of the ensemble setting.
  Tensor predict(std::string_view first, std::string_view second, std::string_view language,
                 std::optional<std::string> only = std::nullopt) const;

  // Languages whose views feed the prediction for an example of `language`.
  std::vector<std::string> views_for(std::string_view language) const;

  // Combines per-view distributions (in views_for order).
  Tensor combine(const std::vector<Tensor>& distributions) const;

 private:
  Translator translator_;
  TokenizerSet tokenizers_;
  StsHead head_;
  std::vector<std::string> view_languages_;
  bool ensemble_;
  EnsembleWeights weights_;
};

// Builds the model described by config around `translator` (its languages and
// tokenizers must match the config).
StsModel make_sts_model(const RunConfig& config, Translator translator, TokenizerSet tokenizers);

struct StsEvaluation {
  std::size_t round = 0;  // 1-based
  std::size_t step = 0;
  double train_loss = 0.0;  // mean over the steps since the previous round
  double dev_metric = 0.0;  // after the hook
  bool metric_defined = true;
};

struct StsTrainingReport {
  std::vector<StsEvaluation> evaluations;
  std::size_t best_round = 0;
  std::size_t best_step = 0;
  double best_metric = 0.0;
  std::vector<double> beta;
  std::size_t trainable_values = 0;
};

// Receives (round, measured dev metric) and returns the value used for model selection.
using DevMetricHook = std::function<double(std::size_t, double)>;

struct StsTrainingOptions {
  DevMetricHook dev_metric_hook;
  std::function<void(const StsEvaluation&, const StsModel&)> on_evaluation;
};

// Adam on the head, the ensemble logits (learnable mode) and the top
// settings.unfreeze_last_n encoder layers; embeddings and other layers stay
// fixed. Evaluates every eval_every steps and at the end, and leaves the model
// at the parameters of the best-scoring round. Throws ConfigError when `dev` is empty.
StsTrainingReport train_sts(StsModel& model, const std::vector<StsExample>& train, const std::vector<StsExample>& dev,
                            const StsTrainingSettings& settings, const std::string& metric, std::uint64_t seed,
                            const StsTrainingOptions& options = {});

// Predicted ratings y = sum_j j p_j, one per example.
std::vector<double> predict_ratings(const StsModel& model, const std::vector<StsExample>& examples,
                                    const std::string& default_language,
                                    std::optional<std::string> only = std::nullopt);

// Pearson against gold ratings or AUC against 0/1 labels.
double evaluate_metric(const std::string& metric, const std::vector<double>& predictions,
                       const std::vector<StsExample>& examples);

// Seeded carve-out: round(fraction * n) examples, at least 1 and at most n - 1, move to dev.
std::pair<std::vector<StsExample>, std::vector<StsExample>> split_dev(std::vector<StsExample> examples,
                                                                      double fraction, std::uint64_t seed);

}  // namespace xlsts

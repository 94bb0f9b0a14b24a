// SPDX-License-Identifier: Apache-2.0
#include "xlsts/pipeline.hpp"

#include <chrono>

#include "xlsts/bleu.hpp"
#include "xlsts/errors.hpp"
#include "xlsts/rng.hpp"

namespace xlsts {

using nlohmann::json;

std::vector<std::vector<std::string>> parallel_sides(const std::vector<ParallelPair>& pairs) {
  std::vector<std::vector<std::string>> sides(2);
  for (const auto& p : pairs) {
    sides[0].push_back(p.source);
    sides[1].push_back(p.target);
  }
  return sides;
}

TokenizerSet train_tokenizers(const RunConfig& config, const std::vector<ParallelPair>& pairs) {
  if (config.languages.size() != 2) throw ConfigError("a parallel corpus needs exactly two languages");
  if (pairs.empty()) throw DataError("parallel corpus is empty");
  return TokenizerSet::train(config.languages, parallel_sides(pairs), config.tokenizer);
}

std::pair<std::vector<ParallelPair>, std::vector<ParallelPair>> split_parallel(std::vector<ParallelPair> pairs,
                                                                               double fraction, std::uint64_t seed) {
  if (fraction <= 0.0) return {std::move(pairs), {}};
  auto n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pairs.size())));
  if (n == 0) return {std::move(pairs), {}};
  if (n >= pairs.size()) throw DataError("held-out fraction leaves no training pairs");
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<bool> held(pairs.size(), false);
  for (std::size_t i = 0; i < n; ++i) held[order[i]] = true;
  std::vector<ParallelPair> train, heldout;
  for (std::size_t i = 0; i < pairs.size(); ++i) (held[i] ? heldout : train).push_back(std::move(pairs[i]));
  return {std::move(train), std::move(heldout)};
}

Translator fresh_translator(const RunConfig& config, const TokenizerSet& tokenizers) {
  std::vector<std::size_t> decoder_sizes;
  for (std::size_t l = 0; l < tokenizers.num_languages(); ++l) {
    decoder_sizes.push_back(tokenizers.decoder_vocab(static_cast<int>(l)).size());
  }
  return Translator(config.transformer, tokenizers.languages(), tokenizers.encoder_vocab().size(), decoder_sizes,
                    config.seed);
}

namespace {

json bleu_table(const Translator& model, const TokenizerSet& tokenizers, const MtCorpus& corpus,
                std::span<const Direction> directions) {
  json out = json::object();
  for (const auto& d : directions) {
    out[direction_name(d, tokenizers.languages())] = evaluate_direction_bleu(model, tokenizers, corpus, d);
  }
  return out;
}

}  // namespace

PretrainResult pretrain_mt(const RunConfig& config, const std::vector<ParallelPair>& train,
                           const std::vector<ParallelPair>& heldout,
                           const std::function<void(const MtStepLog&)>& on_log) {
  config.validate();
  auto tokenizers = train_tokenizers(config, train);
  auto translator = fresh_translator(config, tokenizers);
  const auto corpus = build_mt_corpus(tokenizers, train, config.transformer.max_len);
  const auto directions = translation_directions(config.languages.size());
  auto report = train_translator(translator, tokenizers, corpus, config.loss_weights(), config.noise, config.mt,
                                 config.seed, on_log);

  json curves = json::object();
  for (std::size_t d = 0; d < report.direction_names.size(); ++d) {
    json points = json::array();
    for (const auto& s : report.steps) {
      if (s.step % config.mt.log_every == 0 || s.step == report.steps.size()) {
        points.push_back(json::array({s.step, s.per_direction[d]}));
      }
    }
    curves[report.direction_names[d]] = points;
  }
  json summary{{"train_pairs", train.size()},
               {"heldout_pairs", heldout.size()},
               {"loss_curves", curves},
               {"bleu_train", bleu_table(translator, tokenizers, corpus, directions)}};
  if (!heldout.empty()) {
    const auto held = build_mt_corpus(tokenizers, heldout, config.transformer.max_len);
    summary["bleu_heldout"] = bleu_table(translator, tokenizers, held, directions);
  }
  return PretrainResult{std::move(tokenizers), std::move(translator), std::move(report), std::move(summary)};
}

Translator translator_from_checkpoint(const Checkpoint& checkpoint) {
  auto translator = fresh_translator(checkpoint.config, checkpoint.tokenizers);
  assign_parameters(translator.parameters().entries(), checkpoint);
  return translator;
}

RunConfig sts_config_from(const RunConfig& config, const Checkpoint& mt_checkpoint) {
  RunConfig out = config;
  out.languages = mt_checkpoint.config.languages;
  out.tokenizer = mt_checkpoint.config.tokenizer;
  out.transformer = mt_checkpoint.config.transformer;
  out.validate();
  return out;
}

nlohmann::json report_json(const StsTrainingReport& report) {
  json rounds = json::array();
  for (const auto& e : report.evaluations) {
    rounds.push_back({{"round", e.round},
                      {"step", e.step},
                      {"train_loss", e.train_loss},
                      {"dev_metric", e.metric_defined ? json(e.dev_metric) : json(nullptr)}});
  }
  return json{{"evaluations", rounds},
              {"best_round", report.best_round},
              {"best_step", report.best_step},
              {"best_dev_metric", std::isfinite(report.best_metric) ? json(report.best_metric) : json(nullptr)},
              {"beta", report.beta},
              {"trainable_values", report.trainable_values}};
}

StsRunResult run_sts_training(const RunConfig& config, const Checkpoint& mt_checkpoint,
                              std::vector<StsExample> train, std::vector<StsExample> dev,
                              const StsTrainingOptions& options) {
  require_stage(mt_checkpoint, Stage::kMt);
  const RunConfig effective = sts_config_from(config, mt_checkpoint);
  if (train.empty()) throw DataError("STS training set is empty");
  if (dev.empty()) {
    if (effective.sts.dev_fraction <= 0.0) throw ConfigError("missing dev split");
    std::tie(train, dev) = split_dev(std::move(train), effective.sts.dev_fraction, effective.seed);
  }
  auto model = make_sts_model(effective, translator_from_checkpoint(mt_checkpoint), mt_checkpoint.tokenizers);
  auto report = train_sts(model, train, dev, effective.sts, effective.sts_metric(), effective.seed, options);
  json summary{{"metric", effective.sts_metric()},
               {"train_examples", train.size()},
               {"dev_examples", dev.size()},
               {"training", report_json(report)}};
  return StsRunResult{std::move(model), std::move(report), effective, std::move(summary)};
}

StsModel sts_model_from_checkpoint(const Checkpoint& checkpoint) {
  require_stage(checkpoint, Stage::kSts);
  auto model = make_sts_model(checkpoint.config, fresh_translator(checkpoint.config, checkpoint.tokenizers),
                              checkpoint.tokenizers);
  assign_parameters(model.all_parameters(), checkpoint);
  return model;
}

std::vector<ScoredPair> score_examples(const StsModel& model, const std::vector<StsExample>& examples,
                                       const std::string& default_language, std::optional<std::string> only) {
  if (only) model.tokenizers().language_index(*only);
  NoGradGuard no_grad;
  std::vector<ScoredPair> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    const std::string& lang = ex.language.empty() ? default_language : ex.language;
    model.tokenizers().language_index(lang);
    const auto t0 = std::chrono::steady_clock::now();
    const auto p = model.predict(ex.sentence1, ex.sentence2, lang, only);
    const auto t1 = std::chrono::steady_clock::now();
    ScoredPair s;
    s.distribution.assign(p.values().begin(), p.values().end());
    s.rating = predicted_rating(s.distribution);
    s.latency_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    out.push_back(std::move(s));
  }
  return out;
}

nlohmann::json AblationReport::to_json() const {
  json rows = json::array();
  for (const auto& c : cells) {
    rows.push_back({{"data", c.data},
                    {"pretrained", c.pretrained},
                    {"seed", c.config.seed},
                    {"config", config_to_json(c.config)},
                    {"dev_metric", c.dev_metric},
                    {"test_metric", c.test_metric},
                    {"best_step", c.best_step}});
  }
  return json{{"metric", metric}, {"cells", rows}};
}

namespace {

std::vector<StsExample> with_language(std::vector<StsExample> examples, const std::string& language) {
  for (auto& e : examples) e.language = language;
  return examples;
}

}  // namespace

AblationReport run_ablation(const RunConfig& config, const Checkpoint& mt_checkpoint,
                            const std::vector<StsExample>& rich_train, const std::vector<StsExample>& low_train,
                            std::vector<StsExample> low_dev, const std::vector<StsExample>& low_test,
                            const std::function<void(const AblationCell&)>& on_cell) {
  require_stage(mt_checkpoint, Stage::kMt);
  const RunConfig base = sts_config_from(config, mt_checkpoint);
  const auto& rich = base.ablation.rich_language;
  const auto& low = base.ablation.low_language;
  mt_checkpoint.tokenizers.language_index(rich);
  mt_checkpoint.tokenizers.language_index(low);
  if (rich == low) throw ConfigError("ablation languages must differ");
  if (rich_train.empty() || low_train.empty() || low_test.empty()) {
    throw DataError("ablation needs rich and low training data and a low test set");
  }

  auto low_pool = with_language(low_train, low);
  if (low_dev.empty()) {
    if (base.sts.dev_fraction <= 0.0) throw ConfigError("missing dev split");
    std::tie(low_pool, low_dev) = split_dev(std::move(low_pool), base.sts.dev_fraction, base.seed);
  }
  low_dev = with_language(std::move(low_dev), low);
  const auto test = with_language(low_test, low);
  const auto rich_pool = with_language(rich_train, rich);
  auto both = rich_pool;
  both.insert(both.end(), low_pool.begin(), low_pool.end());

  struct DataCell {
    std::string name;
    const std::vector<StsExample>* train;
    std::string language;
    bool ensemble;
  };
  const std::vector<DataCell> data_cells{{"rich-only", &rich_pool, rich, false},
                                         {"low-only", &low_pool, low, false},
                                         {"both", &both, low, false},
                                         {"both+multilingual", &both, low, true}};

  AblationReport report;
  report.metric = base.sts_metric();
  for (bool pretrained : {false, true}) {
    for (const auto& d : data_cells) {
      AblationCell cell;
      cell.data = d.name;
      cell.pretrained = pretrained;
      cell.config = base;
      cell.config.sts.language = d.language;
      cell.config.sts.ensemble = d.ensemble;
      cell.config.sts.ensemble_languages = d.ensemble ? std::vector<std::string>{rich, low} : std::vector<std::string>{};
      if (d.ensemble && cell.config.sts.beta_mode == BetaMode::kFixed && cell.config.sts.beta.size() != 2) {
        cell.config.sts.beta_mode = BetaMode::kLearnable;
        cell.config.sts.beta.clear();
      }
      if (base.ablation.sts_steps > 0) cell.config.sts.steps = base.ablation.sts_steps;
      cell.config.validate();

      auto translator = pretrained ? translator_from_checkpoint(mt_checkpoint)
                                   : fresh_translator(cell.config, mt_checkpoint.tokenizers);
      auto model = make_sts_model(cell.config, std::move(translator), mt_checkpoint.tokenizers);
      const auto training = train_sts(model, *d.train, low_dev, cell.config.sts, report.metric, cell.config.seed);
      cell.dev_metric = training.best_metric;
      cell.best_step = training.best_step;
      cell.test_metric = evaluate_metric(report.metric, predict_ratings(model, test, low), test);
      if (on_cell) on_cell(cell);
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

}  // namespace xlsts

// SPDX-License-Identifier: Apache-2.0
#include "xlsts/sts_model.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "xlsts/adam.hpp"
#include "xlsts/errors.hpp"
#include "xlsts/metrics.hpp"
#include "xlsts/ops.hpp"

namespace xlsts {

StsModel::StsModel(Translator translator, TokenizerSet tokenizers, StsConfig head_config,
                   std::vector<std::string> view_languages, bool ensemble, EnsembleWeights weights, std::uint64_t seed)
    : translator_(std::move(translator)),
      tokenizers_(std::move(tokenizers)),
      head_(head_config, translator_.config().d_model, seed),
      view_languages_(std::move(view_languages)),
      ensemble_(ensemble),
      weights_(std::move(weights)) {
  if (tokenizers_.languages() != translator_.languages()) throw ConfigError("tokenizer and encoder languages differ");
  if (view_languages_.empty()) throw ConfigError("at least one view language is required");
  for (const auto& l : view_languages_) tokenizers_.language_index(l);
  if (ensemble_ && weights_.size() != view_languages_.size()) {
    throw ConfigError("ensemble weights do not match the view languages");
  }
}

std::vector<NamedTensor> StsModel::all_parameters() const {
  auto out = translator_.parameters().entries();
  for (const auto& p : head_.parameters().entries()) out.push_back(p);
  if (ensemble_) {
    for (const auto& p : weights_.parameters()) out.push_back(p);
  }
  return out;
}

Tensor StsModel::encode(std::string_view sentence, std::string_view language) const {
  return translator_.encode(tokenizers_.encode_for_direction(sentence, language).ids);
}

std::vector<std::string> StsModel::views_for(std::string_view language) const {
  if (ensemble_) return view_languages_;
  return {std::string(language)};
}

Tensor StsModel::combine(const std::vector<Tensor>& distributions) const {
  if (!ensemble_) {
    if (distributions.size() != 1) throw ContractError("one view expected with the ensemble off");
    return distributions.front();
  }
  return ensemble_predict(distributions, weights_);
}

Tensor StsModel::predict(std::string_view first, std::string_view second, std::string_view language,
                         std::optional<std::string> only) const {
  if (only) return head_.forward(encode(first, *only), encode(second, *only));
  std::vector<Tensor> views;
  for (const auto& l : views_for(language)) views.push_back(head_.forward(encode(first, l), encode(second, l)));
  return combine(views);
}

StsModel make_sts_model(const RunConfig& config, Translator translator, TokenizerSet tokenizers) {
  if (translator.languages() != config.languages) throw ConfigError("checkpoint languages differ from the config");
  const auto views = config.view_languages();
  EnsembleWeights weights = EnsembleWeights::one_hot(1, 0);
  if (config.sts.ensemble) {
    weights = config.sts.beta_mode == BetaMode::kFixed ? EnsembleWeights::fixed(config.sts.beta)
                                                       : EnsembleWeights::learnable(views.size());
  }
  return StsModel(std::move(translator), std::move(tokenizers), config.sts.head, views, config.sts.ensemble,
                  std::move(weights), config.seed ^ 0x5354534845414400ULL);
}

namespace {

// Encoder outputs with the frozen layers [0, first_trainable) computed once per
// (sentence, language).
class EncoderCache {
 public:
  EncoderCache(const StsModel& model, std::size_t first_trainable)
      : model_(model), first_trainable_(first_trainable) {}

  Tensor states(const std::string& sentence, const std::string& language) {
    auto key = std::make_pair(sentence, language);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      NoGradGuard no_grad;
      const auto& t = model_.translator();
      PackedBatch b;
      b.ids = model_.tokenizers().encode_for_direction(sentence, language).ids;
      b.lengths = {b.ids.size()};
      auto prefix = t.run_encoder_layers(t.embed(b), b.lengths, 0, first_trainable_);
      it = cache_.emplace(std::move(key), prefix).first;
    }
    const auto& t = model_.translator();
    if (first_trainable_ == t.config().encoder_layers) return it->second;
    const std::vector<std::size_t> len{it->second.rows()};
    return t.run_encoder_layers(it->second, len, first_trainable_, t.config().encoder_layers);
  }

 private:
  const StsModel& model_;
  std::size_t first_trainable_;
  std::map<std::pair<std::string, std::string>, Tensor> cache_;
};

Tensor example_distribution(const StsModel& model, EncoderCache& cache, const StsExample& ex,
                            const std::string& default_language) {
  const std::string& lang = ex.language.empty() ? default_language : ex.language;
  std::vector<Tensor> views;
  for (const auto& l : model.views_for(lang)) {
    views.push_back(model.head().forward(cache.states(ex.sentence1, l), cache.states(ex.sentence2, l)));
  }
  return model.combine(views);
}

}  // namespace

std::vector<double> predict_ratings(const StsModel& model, const std::vector<StsExample>& examples,
                                    const std::string& default_language, std::optional<std::string> only) {
  NoGradGuard no_grad;
  std::vector<double> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    const std::string& lang = ex.language.empty() ? default_language : ex.language;
    out.push_back(predicted_rating(model.predict(ex.sentence1, ex.sentence2, lang, only).values()));
  }
  return out;
}

double evaluate_metric(const std::string& metric, const std::vector<double>& predictions,
                       const std::vector<StsExample>& examples) {
  std::vector<double> golds;
  for (const auto& e : examples) golds.push_back(e.gold);
  if (metric == "pearson") return evaluate_pearson(predictions, golds);
  if (metric == "auc") return evaluate_auc(predictions, golds);
  throw ConfigError("unknown metric '" + metric + "'");
}

std::pair<std::vector<StsExample>, std::vector<StsExample>> split_dev(std::vector<StsExample> examples,
                                                                      double fraction, std::uint64_t seed) {
  if (examples.size() < 2) throw DataError("need at least two examples to carve out a dev split");
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("dev fraction must lie in (0, 1)");
  Rng rng(seed);
  rng.shuffle(examples);
  auto n_dev = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(examples.size())));
  n_dev = std::clamp<std::size_t>(n_dev, 1, examples.size() - 1);
  std::vector<StsExample> dev(examples.begin(), examples.begin() + static_cast<std::ptrdiff_t>(n_dev));
  std::vector<StsExample> train(examples.begin() + static_cast<std::ptrdiff_t>(n_dev), examples.end());
  for (auto& e : dev) e.split = Split::kDev;
  for (auto& e : train) e.split = Split::kTrain;
  return {std::move(train), std::move(dev)};
}

StsTrainingReport train_sts(StsModel& model, const std::vector<StsExample>& train, const std::vector<StsExample>& dev,
                            const StsTrainingSettings& settings, const std::string& metric, std::uint64_t seed,
                            const StsTrainingOptions& options) {
  if (dev.empty()) throw ConfigError("STS training needs a dev split");
  if (train.empty()) throw DataError("STS training set is empty");
  const std::size_t layers = model.translator().config().encoder_layers;
  if (settings.unfreeze_last_n > layers) throw ConfigError("unfreeze_last_n exceeds the encoder depth");
  const double k = static_cast<double>(model.max_level());
  check_gold_range(train, k);
  check_gold_range(dev, k);
  const std::string default_language = settings.language.empty() ? model.translator().languages().front()
                                                                  : settings.language;

  std::vector<NamedTensor> trainable = model.head().parameters().entries();
  if (model.ensemble()) {
    for (const auto& p : model.weights().parameters()) trainable.push_back(p);
  }
  const std::size_t first_trainable = layers - settings.unfreeze_last_n;
  for (std::size_t i = first_trainable; i < layers; ++i) {
    for (const auto& p : model.translator().encoder_layer_parameters(i)) trainable.push_back(p);
  }

  StsTrainingReport report;
  for (const auto& p : trainable) report.trainable_values += p.tensor.numel();

  std::vector<RatingDistribution> targets;
  for (const auto& e : train) targets.push_back(sparse_target(e.gold, model.max_level()));

  model.translator().set_training(false);
  EncoderCache cache(model, first_trainable);
  Adam adam(trainable, AdamConfig{settings.learning_rate});
  Rng rng(seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();

  std::vector<std::vector<double>> best_values;
  double best = -std::numeric_limits<double>::infinity();
  double loss_sum = 0.0;
  std::size_t loss_steps = 0;

  auto evaluate = [&](std::size_t step) {
    StsEvaluation ev;
    ev.round = report.evaluations.size() + 1;
    ev.step = step;
    ev.train_loss = loss_steps ? loss_sum / static_cast<double>(loss_steps) : 0.0;
    loss_sum = 0.0;
    loss_steps = 0;
    std::vector<double> predictions;
    {
      NoGradGuard no_grad;
      for (const auto& e : dev) {
        predictions.push_back(predicted_rating(example_distribution(model, cache, e, default_language).values()));
      }
    }
    double measured = std::numeric_limits<double>::quiet_NaN();
    try {
      measured = evaluate_metric(metric, predictions, dev);
    } catch (const NumericError&) {
    }
    ev.dev_metric = options.dev_metric_hook ? options.dev_metric_hook(ev.round, measured) : measured;
    ev.metric_defined = std::isfinite(ev.dev_metric);
    if (ev.metric_defined && ev.dev_metric > best) {
      best = ev.dev_metric;
      report.best_round = ev.round;
      report.best_step = step;
      report.best_metric = ev.dev_metric;
      best_values.clear();
      for (const auto& p : trainable) best_values.emplace_back(p.tensor.values().begin(), p.tensor.values().end());
    }
    report.evaluations.push_back(ev);
    if (options.on_evaluation) options.on_evaluation(ev, model);
  };

  for (std::size_t step = 1; step <= settings.steps; ++step) {
    adam.zero_grad();
    std::vector<Tensor> losses;
    for (std::size_t b = 0; b < settings.batch_size; ++b) {
      if (cursor == order.size()) {
        rng.shuffle(order);
        cursor = 0;
      }
      const std::size_t i = order[cursor++];
      losses.push_back(kl_loss(targets[i], example_distribution(model, cache, train[i], default_language)));
    }
    Tensor total = losses.front();
    for (std::size_t i = 1; i < losses.size(); ++i) total = add(total, losses[i]);
    total = scale(total, 1.0 / static_cast<double>(losses.size()));
    if (!std::isfinite(total.item())) throw NumericError("STS loss is not finite at step " + std::to_string(step));
    total.backward();
    adam.step();
    loss_sum += total.item();
    ++loss_steps;
    if (step % settings.eval_every == 0 || step == settings.steps) evaluate(step);
  }
  if (settings.steps == 0) evaluate(0);

  if (!best_values.empty()) {
    for (std::size_t i = 0; i < trainable.size(); ++i) {
      auto dst = Tensor(trainable[i].tensor).mutable_values();
      std::copy(best_values[i].begin(), best_values[i].end(), dst.begin());
    }
  } else {
    report.best_round = report.evaluations.size();
    report.best_step = settings.steps;
    report.best_metric = std::numeric_limits<double>::quiet_NaN();
  }
  if (model.ensemble()) report.beta = model.weights().values();
  return report;
}

}  // namespace xlsts

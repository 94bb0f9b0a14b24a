// SPDX-License-Identifier: Apache-2.0
#include "xlsts/mt_training.hpp"

#include "xlsts/bleu.hpp"
#include "xlsts/bpe.hpp"
#include "xlsts/errors.hpp"
#include "xlsts/vocab.hpp"

namespace xlsts {

MtCorpus build_mt_corpus(const TokenizerSet& tokenizers, const std::vector<ParallelPair>& pairs, std::size_t max_len) {
  if (tokenizers.num_languages() != 2) throw DataError("a parallel corpus needs exactly two languages");
  if (pairs.empty()) throw DataError("empty parallel corpus");
  MtCorpus c;
  c.encoder_ids.resize(2);
  c.decoder_ids.resize(2);
  c.text.resize(2);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string* sides[2] = {&pairs[i].source, &pairs[i].target};
    for (int l = 0; l < 2; ++l) {
      auto enc = tokenizers.subword_ids(*sides[l]);
      auto dec = tokenizers.decoder_ids(*sides[l], l);
      if (enc.empty() || dec.empty()) throw DataError("pair " + std::to_string(i + 1) + " has an empty sentence");
      if (enc.size() + 2 > max_len || dec.size() + 1 > max_len) {
        throw DataError("pair " + std::to_string(i + 1) + " does not fit max_len " + std::to_string(max_len));
      }
      c.encoder_ids[l].push_back(std::move(enc));
      c.decoder_ids[l].push_back(std::move(dec));
      c.text[l].push_back(*sides[l]);
    }
  }
  return c;
}

std::vector<TranslationExample> sample_mt_batch(const MtCorpus& corpus, const TokenizerSet& tokenizers,
                                                std::span<const Direction> directions, const MtLossWeights& weights,
                                                const NoiseConfig& noise, std::size_t batch_tokens, Rng& rng) {
  if (weights.size() != directions.size()) throw ConfigError("one weight per direction required");
  const auto& vocab = tokenizers.encoder_vocab();
  auto word_end = [&](int id) { return id == Vocabulary::kUnk || ends_word(vocab.token(id)); };
  std::vector<TranslationExample> batch;
  std::size_t tokens = 0;
  while (true) {
    double u = rng.uniform(), acc = 0.0;
    std::size_t d = 0;
    for (; d + 1 < directions.size(); ++d) {
      acc += weights[d];
      if (weights[d] > 0.0 && u < acc) break;
    }
    while (weights[d] == 0.0) --d;
    const auto& dir = directions[d];
    const std::size_t i = rng.below(corpus.size());
    TranslationExample ex;
    ex.direction = d;
    ex.source = tokenizers.with_target(corpus.encoder_ids[dir.source][i], dir.target, dir.source);
    if (dir.is_self()) ex.source = denoise(ex.source, noise, rng, word_end);
    ex.target = corpus.decoder_ids[dir.target][i];
    const std::size_t n = ex.source.ids.size() + ex.target.size() + 1;
    if (!batch.empty() && tokens + n > batch_tokens) break;
    tokens += n;
    batch.push_back(std::move(ex));
  }
  return batch;
}

MtTrainingReport train_translator(Translator& model, const TokenizerSet& tokenizers, const MtCorpus& corpus,
                                  const MtLossWeights& weights, const NoiseConfig& noise,
                                  const MtTrainingSettings& settings, std::uint64_t seed,
                                  const std::function<void(const MtStepLog&)>& on_log) {
  noise.validate();
  const auto directions = translation_directions(model.num_languages());
  MtTrainingReport report;
  for (const auto& d : directions) report.direction_names.push_back(direction_name(d, model.languages()));

  Rng rng(seed);
  Adam adam(model.parameters().entries(), AdamConfig{settings.learning_rate});
  model.set_training(true);
  for (std::size_t step = 1; step <= settings.steps; ++step) {
    auto batch = sample_mt_batch(corpus, tokenizers, directions, weights, noise, settings.batch_tokens, rng);
    adam.zero_grad();
    auto loss = mt_loss(model, batch, weights, directions, settings.label_smoothing);
    loss.total.backward();
    adam.step();
    MtStepLog log{step, loss.total.item(), loss.per_direction};
    if (on_log && settings.log_every > 0 && (step % settings.log_every == 0 || step == 1)) on_log(log);
    report.steps.push_back(std::move(log));
  }
  model.set_training(false);
  return report;
}

double evaluate_direction_bleu(const Translator& model, const TokenizerSet& tokenizers, const MtCorpus& corpus,
                               const Direction& direction, std::size_t limit) {
  const std::size_t n = limit == 0 ? corpus.size() : std::min(limit, corpus.size());
  std::vector<std::vector<int>> sources;
  std::vector<std::string> references;
  std::size_t longest = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sources.push_back(tokenizers.with_target(corpus.encoder_ids[direction.source][i], direction.target).ids);
    references.push_back(corpus.text[direction.target][i]);
    longest = std::max(longest, corpus.decoder_ids[direction.target][i].size());
  }
  std::vector<std::string> candidates;
  const std::size_t chunk = 16;
  for (std::size_t b = 0; b < n; b += chunk) {
    std::vector<std::vector<int>> part(sources.begin() + b, sources.begin() + std::min(n, b + chunk));
    for (const auto& out : model.greedy_decode(PackedBatch::pack(part), direction.target, 2 * longest + 4)) {
      candidates.push_back(tokenizers.decode_text(out, direction.target));
    }
  }
  return bleu4(candidates, references);
}

}  // namespace xlsts

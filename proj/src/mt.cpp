// SPDX-License-Identifier: Apache-2.0
#include "xlsts/mt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "xlsts/errors.hpp"
#include "xlsts/ops.hpp"
#include "xlsts/vocab.hpp"

namespace xlsts {

std::vector<Direction> translation_directions(std::size_t num_languages) {
  std::vector<Direction> out;
  const int k = static_cast<int>(num_languages);
  for (int s = 0; s < k; ++s) {
    for (int t = 0; t < k; ++t) {
      if (s != t) out.push_back({s, t});
    }
  }
  for (int s = 0; s < k; ++s) out.push_back({s, s});
  return out;
}

std::string direction_name(const Direction& d, std::span<const std::string> languages) {
  return languages[static_cast<std::size_t>(d.source)] + "->" + languages[static_cast<std::size_t>(d.target)];
}

MtLossWeights::MtLossWeights(std::vector<double> lambda) : lambda_(std::move(lambda)) {
  double total = 0.0;
  for (double l : lambda_) {
    if (!std::isfinite(l) || l < 0.0) throw ConfigError("direction weights must be finite and nonnegative");
    total += l;
  }
  if (!(total > 0.0)) throw ConfigError("direction weights must not all be zero");
  for (double& l : lambda_) l /= total;
}

MtLossWeights MtLossWeights::uniform(std::size_t directions) {
  return MtLossWeights(std::vector<double>(directions, 1.0));
}

void NoiseConfig::validate() const {
  if (!(drop_prob >= 0.0 && drop_prob < 1.0)) throw ConfigError("drop_prob must lie in [0, 1)");
}

std::vector<std::vector<int>> corrupt_units(std::vector<std::vector<int>> units, const NoiseConfig& noise, Rng& rng) {
  noise.validate();
  if (units.empty()) return units;
  std::vector<std::vector<int>> kept;
  for (auto& u : units) {
    if (rng.uniform() >= noise.drop_prob) kept.push_back(std::move(u));
  }
  if (kept.empty()) kept.push_back(std::move(units[rng.below(units.size())]));

  std::vector<std::pair<double, std::size_t>> keys(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    keys[i] = {static_cast<double>(i) + rng.uniform(0.0, static_cast<double>(noise.swap_window) + 1.0), i};
  }
  std::stable_sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::vector<int>> out;
  out.reserve(kept.size());
  for (const auto& [key, i] : keys) out.push_back(std::move(kept[i]));
  return out;
}

TokenizedSentence denoise(const TokenizedSentence& sentence, const NoiseConfig& noise, Rng& rng,
                          const std::function<bool(int)>& is_word_end) {
  const auto& ids = sentence.ids;
  if (ids.size() < 3) return sentence;
  const bool has_eos = ids.back() == Vocabulary::kEos;
  const std::size_t end = has_eos ? ids.size() - 1 : ids.size();
  std::vector<std::vector<int>> words;
  std::vector<int> current;
  for (std::size_t i = 1; i < end; ++i) {
    current.push_back(ids[i]);
    if (is_word_end(ids[i])) words.push_back(std::exchange(current, {}));
  }
  if (!current.empty()) words.push_back(std::move(current));

  TokenizedSentence out = sentence;
  out.ids.assign(1, ids.front());
  for (const auto& w : corrupt_units(std::move(words), noise, rng)) out.ids.insert(out.ids.end(), w.begin(), w.end());
  if (has_eos) out.ids.push_back(Vocabulary::kEos);
  return out;
}

TokenizedSentence denoise(const TokenizedSentence& sentence, const NoiseConfig& noise, Rng& rng) {
  return denoise(sentence, noise, rng, [](int) { return true; });
}

MtLoss mt_loss(const Translator& model, std::span<const TranslationExample> batch, const MtLossWeights& weights,
               std::span<const Direction> directions, double label_smoothing) {
  if (batch.empty()) throw ContractError("mt_loss on an empty batch");
  if (weights.size() != directions.size()) throw ConfigError("one weight per direction required");
  MtLoss result;
  result.per_direction.assign(directions.size(), 0.0);
  result.tokens_per_direction.assign(directions.size(), 0);

  std::vector<Tensor> terms;
  for (std::size_t d = 0; d < directions.size(); ++d) {
    std::vector<std::vector<int>> sources, inputs;
    std::vector<int> targets;
    for (const auto& ex : batch) {
      if (ex.direction >= directions.size()) throw ContractError("example direction out of range");
      if (ex.direction != d) continue;
      if (ex.source.target_language != directions[d].target) {
        throw DataError("example language token does not match its direction");
      }
      sources.push_back(ex.source.ids);
      std::vector<int> in{Vocabulary::kBos};
      in.insert(in.end(), ex.target.begin(), ex.target.end());
      inputs.push_back(std::move(in));
      targets.insert(targets.end(), ex.target.begin(), ex.target.end());
      targets.push_back(Vocabulary::kEos);
    }
    if (sources.empty() || weights[d] == 0.0) continue;
    const auto src = PackedBatch::pack(sources);
    const auto memory = model.encode(src);
    const auto logits = model.decode_teacher_forced(memory, src.lengths, PackedBatch::pack(inputs), directions[d].target);
    auto ce = cross_entropy(logits, targets, label_smoothing);
    result.per_direction[d] = ce.item();
    result.tokens_per_direction[d] = targets.size();
    terms.push_back(scale(ce, weights[d]));
  }
  if (terms.empty()) {
    result.total = Tensor::scalar(0.0);
    return result;
  }
  Tensor total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = add(total, terms[i]);
  if (!std::isfinite(total.item())) throw NumericError("translation loss is not finite");
  result.total = total;
  return result;
}

}  // namespace xlsts

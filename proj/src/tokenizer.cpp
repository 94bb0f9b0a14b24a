// SPDX-License-Identifier: Apache-2.0
#include "xlsts/tokenizer.hpp"

#include <algorithm>

#include "xlsts/errors.hpp"
#include "xlsts/text.hpp"

namespace xlsts {

namespace {

std::map<std::string, std::int64_t> count_subwords(const SubwordModel& model, const WordCounts& words) {
  std::map<std::string, std::int64_t> counts;
  for (const auto& [word, n] : words) {
    for (auto& s : apply_bpe(model, word)) counts[s] += n;
  }
  return counts;
}

std::vector<int> segment_ids(const SubwordModel& model, const Vocabulary& vocab, std::string_view sentence) {
  std::vector<int> ids;
  for (const auto& word : text::normalize_words(sentence)) {
    for (const auto& s : apply_bpe(model, word)) ids.push_back(vocab.id(s));
  }
  return ids;
}

}  // namespace

WordCounts count_words(std::span<const std::string> sentences) {
  WordCounts counts;
  for (const auto& s : sentences) {
    for (auto& w : text::normalize_words(s)) counts[w] += 1;
  }
  return counts;
}

TokenizerSet::TokenizerSet(std::vector<std::string> languages, SubwordModel encoder_model, Vocabulary encoder_vocab,
                           std::vector<SubwordModel> decoder_models, std::vector<Vocabulary> decoder_vocabs)
    : languages_(std::move(languages)),
      encoder_model_(std::move(encoder_model)),
      encoder_vocab_(std::move(encoder_vocab)),
      decoder_models_(std::move(decoder_models)),
      decoder_vocabs_(std::move(decoder_vocabs)) {
  if (languages_.empty()) throw ConfigError("at least one language is required");
  if (decoder_models_.size() != languages_.size() || decoder_vocabs_.size() != languages_.size()) {
    throw ConfigError("one decoder-side subword model and vocabulary per language required");
  }
  for (const auto& l : languages_) encoder_vocab_.language_id(l);
}

TokenizerSet TokenizerSet::train(std::vector<std::string> languages,
                                 const std::vector<std::vector<std::string>>& corpora,
                                 const TokenizerSettings& settings) {
  if (corpora.size() != languages.size()) throw ConfigError("one corpus per language required");
  const auto reserved = reserved_tokens(languages);
  WordCounts mixed;
  std::vector<WordCounts> per_language;
  for (const auto& c : corpora) {
    per_language.push_back(count_words(c));
    if (per_language.back().empty()) throw DataError("empty corpus for a language");
    for (const auto& [w, n] : per_language.back()) mixed[w] += n;
  }
  auto encoder_model = learn_bpe(mixed, settings.encoder_merges);
  auto encoder_vocab = build_vocab(count_subwords(encoder_model, mixed), settings.encoder_vocab, reserved);
  std::vector<SubwordModel> decoder_models;
  std::vector<Vocabulary> decoder_vocabs;
  for (const auto& words : per_language) {
    decoder_models.push_back(learn_bpe(words, settings.decoder_merges));
    decoder_vocabs.push_back(build_vocab(count_subwords(decoder_models.back(), words), settings.decoder_vocab, reserved));
  }
  return TokenizerSet(std::move(languages), std::move(encoder_model), std::move(encoder_vocab),
                      std::move(decoder_models), std::move(decoder_vocabs));
}

int TokenizerSet::language_index(std::string_view code) const {
  auto it = std::find(languages_.begin(), languages_.end(), code);
  if (it == languages_.end()) throw ConfigError("unknown language '" + std::string(code) + "'");
  return static_cast<int>(it - languages_.begin());
}

std::vector<int> TokenizerSet::subword_ids(std::string_view sentence) const {
  return segment_ids(encoder_model_, encoder_vocab_, sentence);
}

TokenizedSentence TokenizerSet::encode_for_direction(std::string_view sentence, std::string_view target_language) const {
  const int target = language_index(target_language);
  return with_target(subword_ids(sentence), target);
}

TokenizedSentence TokenizerSet::with_target(std::span<const int> subword_ids, int target_language,
                                            int source_language) const {
  if (target_language < 0 || static_cast<std::size_t>(target_language) >= languages_.size()) {
    throw ConfigError("unknown target language index " + std::to_string(target_language));
  }
  TokenizedSentence out;
  out.language = source_language;
  out.target_language = target_language;
  out.ids.reserve(subword_ids.size() + 2);
  out.ids.push_back(encoder_vocab_.language_id(languages_[static_cast<std::size_t>(target_language)]));
  out.ids.insert(out.ids.end(), subword_ids.begin(), subword_ids.end());
  out.ids.push_back(Vocabulary::kEos);
  return out;
}

std::vector<int> TokenizerSet::decoder_ids(std::string_view sentence, int language) const {
  return segment_ids(decoder_model(language), decoder_vocab(language), sentence);
}

std::string TokenizerSet::decode_text(std::span<const int> ids, int language) const {
  const auto& vocab = decoder_vocab(language);
  std::vector<std::string> subwords;
  for (int id : ids) {
    if (id == Vocabulary::kEos) break;
    if (id == Vocabulary::kUnk) {
      subwords.push_back(std::string(kUnkToken) + std::string(kWordEnd));
    } else if (id >= 0 && static_cast<std::size_t>(id) >= vocab.num_reserved()) {
      subwords.push_back(vocab.token(id));
    }
  }
  return detokenize(subwords);
}

void TokenizerSet::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  encoder_model_.save(dir / "encoder.bpe");
  encoder_vocab_.save(dir / "encoder.vocab");
  for (std::size_t i = 0; i < languages_.size(); ++i) {
    decoder_models_[i].save(dir / ("decoder." + languages_[i] + ".bpe"));
    decoder_vocabs_[i].save(dir / ("decoder." + languages_[i] + ".vocab"));
  }
}

TokenizerSet TokenizerSet::load(const std::filesystem::path& dir, std::vector<std::string> languages) {
  std::vector<SubwordModel> models;
  std::vector<Vocabulary> vocabs;
  for (const auto& l : languages) {
    models.push_back(SubwordModel::load(dir / ("decoder." + l + ".bpe")));
    vocabs.push_back(Vocabulary::load(dir / ("decoder." + l + ".vocab")));
  }
  return TokenizerSet(std::move(languages), SubwordModel::load(dir / "encoder.bpe"),
                      Vocabulary::load(dir / "encoder.vocab"), std::move(models), std::move(vocabs));
}

std::map<std::string, std::string> TokenizerSet::fingerprints() const {
  std::map<std::string, std::string> out{{"encoder", encoder_vocab_.fingerprint()}};
  for (std::size_t i = 0; i < languages_.size(); ++i) out["decoder." + languages_[i]] = decoder_vocabs_[i].fingerprint();
  return out;
}

}  // namespace xlsts

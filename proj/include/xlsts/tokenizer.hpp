// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xlsts/bpe.hpp"
#include "xlsts/vocab.hpp"

namespace xlsts {

struct TokenizerSettings {
  std::size_t encoder_merges = 200;
  std::size_t decoder_merges = 120;
  std::size_t encoder_vocab = 512;
  std::size_t decoder_vocab = 256;
};

// Encoder-side sentence: ids = [<2target>] ++ subword ids ++ [</s>].
struct TokenizedSentence {
  int language = -1;  // source language index, -1 when not known
  int target_language = -1;
  std::vector<int> ids;
};

// Counts normalized words over a set of sentences.
WordCounts count_words(std::span<const std::string> sentences);

// One shared encoder-side subword model and vocabulary over all languages, plus a
// separate decoder-side model and vocabulary per language.
class TokenizerSet {
 public:
  TokenizerSet() = default;
  TokenizerSet(std::vector<std::string> languages, SubwordModel encoder_model, Vocabulary encoder_vocab,
               std::vector<SubwordModel> decoder_models, std::vector<Vocabulary> decoder_vocabs);

  // corpora[i] holds the sentences of languages[i]; the encoder side learns on
  // their union, each decoder side on its own language only.
  static TokenizerSet train(std::vector<std::string> languages, const std::vector<std::vector<std::string>>& corpora,
                            const TokenizerSettings& settings);

  const std::vector<std::string>& languages() const { return languages_; }
  std::size_t num_languages() const { return languages_.size(); }
  // Throws ConfigError for an unsupported language code.
  int language_index(std::string_view code) const;

  // Lowercased, whitespace-split, BPE-segmented encoder ids without any specials.
  std::vector<int> subword_ids(std::string_view sentence) const;
  TokenizedSentence encode_for_direction(std::string_view sentence, std::string_view target_language) const;
  TokenizedSentence with_target(std::span<const int> subword_ids, int target_language, int source_language = -1) const;

  // Decoder-side ids of `sentence` in `language`'s vocabulary, no BOS/EOS.
  std::vector<int> decoder_ids(std::string_view sentence, int language) const;
  // Inverse of decoder_ids for generated output: stops at EOS, drops other specials.
  std::string decode_text(std::span<const int> ids, int language) const;

  const SubwordModel& encoder_model() const { return encoder_model_; }
  const Vocabulary& encoder_vocab() const { return encoder_vocab_; }
  const SubwordModel& decoder_model(int language) const { return decoder_models_.at(static_cast<std::size_t>(language)); }
  const Vocabulary& decoder_vocab(int language) const { return decoder_vocabs_.at(static_cast<std::size_t>(language)); }

  // encoder.bpe, encoder.vocab, decoder.<lang>.bpe, decoder.<lang>.vocab
  void save(const std::filesystem::path& dir) const;
  static TokenizerSet load(const std::filesystem::path& dir, std::vector<std::string> languages);
  // Keys "encoder" and "decoder.<lang>", values are vocabulary fingerprints.
  std::map<std::string, std::string> fingerprints() const;

 private:
  std::vector<std::string> languages_;
  SubwordModel encoder_model_;
  Vocabulary encoder_vocab_;
  std::vector<SubwordModel> decoder_models_;
  std::vector<Vocabulary> decoder_vocabs_;
};

}  // namespace xlsts

// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>

#include "xlsts/bpe.hpp"
#include "xlsts/errors.hpp"
#include "xlsts/rng.hpp"
#include "xlsts/text.hpp"
#include "xlsts/tokenizer.hpp"
#include "xlsts/vocab.hpp"

using namespace xlsts;

namespace {

std::vector<std::string> stripped(const std::vector<std::string>& subwords) {
  std::vector<std::string> out;
  for (const auto& s : subwords) out.push_back(strip_word_end(s));
  return out;
}

std::string concat(const std::vector<std::string>& subwords) {
  std::string out;
  for (const auto& s : subwords) out += strip_word_end(s);
  return out;
}

TokenizerSet toy_tokenizers() {
  std::vector<std::vector<std::string>> corpora{
      {"the cat sleeps", "the dog runs", "a small cat eats", "the big dog sleeps"},
      {"el gato duerme", "el perro corre", "un gato pequeño come", "el perro grande duerme"}};
  TokenizerSettings settings;
  settings.encoder_merges = 30;
  settings.decoder_merges = 20;
  settings.encoder_vocab = 80;
  settings.decoder_vocab = 60;
  return TokenizerSet::train({"en", "es"}, corpora, settings);
}

}  // namespace

TEST_CASE("learn_bpe picks the most frequent pair") {
  auto model = learn_bpe({{"aaab", 1}, {"aab", 1}}, 1);
  REQUIRE(model.merges().size() == 1);
  CHECK(model.merges()[0] == MergePair{"a", "a"});
  CHECK(learn_bpe({{"aaab", 1}}, 0).merges().empty());
  CHECK_THROWS_AS(learn_bpe({}, 3), DataError);
}

TEST_CASE("learn_bpe stops when nothing is left to merge") {
  auto model = learn_bpe({{"ab", 4}}, 50);
  CHECK(model.merges().size() == 1);
}

TEST_CASE("apply_bpe segmentation") {
  SubwordModel aa(std::vector<MergePair>{{"a", "a"}});
  CHECK(stripped(apply_bpe(aa, "aaab")) == std::vector<std::string>{"aa", "a", "b"});
  auto chars = apply_bpe(SubwordModel{}, "cat");
  CHECK(chars == std::vector<std::string>{"c", "a", "t</w>"});
  CHECK_THROWS_AS(apply_bpe(aa, ""), InputError);
  CHECK_THROWS_AS(SubwordModel(std::vector<MergePair>{{"a", "b"}, {"a", "b"}}), DataError);
}

TEST_CASE("segmentation is a partition of the word") {
  Rng rng(17);
  const std::vector<std::string> alphabet{"a", "b", "c", "é", "ñ", "д", "ж", "x"};
  WordCounts corpus;
  std::vector<std::string> words;
  for (int i = 0; i < 200; ++i) {
    std::string w;
    const auto len = 1 + rng.below(8);
    for (std::size_t j = 0; j < len; ++j) w += alphabet[rng.below(alphabet.size())];
    words.push_back(w);
    corpus[w] += 1 + static_cast<std::int64_t>(rng.below(3));
  }
  auto model = learn_bpe(corpus, 40);
  for (const auto& w : words) {
    auto pieces = apply_bpe(model, w);
    CHECK(concat(pieces) == w);
    CHECK(detokenize(pieces) == w);
    for (std::size_t i = 0; i + 1 < pieces.size(); ++i) CHECK_FALSE(ends_word(pieces[i]));
    CHECK(ends_word(pieces.back()));
  }
  CHECK(apply_bpe(model, "zzq").size() >= 1);
}

TEST_CASE("subword model file round trip") {
  auto model = learn_bpe({{"banana", 3}, {"bandana", 2}}, 6);
  auto text = model.serialize();
  CHECK(text.rfind("#version:1\n", 0) == 0);
  CHECK(SubwordModel::parse(text).merges() == model.merges());
  CHECK_THROWS_AS(SubwordModel::parse("a b\n"), DataError);
}

TEST_CASE("build_vocab keeps the top subwords") {
  const auto reserved = reserved_tokens(std::vector<std::string>{"en", "es"});
  auto vocab = build_vocab({{"a", 5}, {"b", 3}, {"c", 1}}, reserved.size() + 2, reserved);
  CHECK(vocab.size() == reserved.size() + 2);
  CHECK(vocab.find("a").has_value());
  CHECK(vocab.find("b").has_value());
  CHECK(vocab.id("c") == Vocabulary::kUnk);
  CHECK(vocab.id("<2es>") == 5);
  CHECK_THROWS_AS(build_vocab({{"a", 1}}, reserved.size(), reserved), ConfigError);

  auto again = build_vocab({{"a", 5}, {"b", 3}, {"c", 1}}, reserved.size() + 2, reserved);
  CHECK(again.serialize() == vocab.serialize());
}

TEST_CASE("vocabulary ties break lexicographically") {
  const auto reserved = reserved_tokens(std::vector<std::string>{"en"});
  auto vocab = build_vocab({{"zz", 2}, {"bb", 2}, {"aa", 2}}, reserved.size() + 2, reserved);
  CHECK(vocab.find("aa").has_value());
  CHECK(vocab.find("bb").has_value());
  CHECK_FALSE(vocab.find("zz").has_value());
}

TEST_CASE("vocabulary file round trip") {
  const auto reserved = reserved_tokens(std::vector<std::string>{"en", "es"});
  auto vocab = build_vocab({{"la</w>", 4}, {"ca", 2}, {"t</w>", 2}}, 20, reserved);
  auto text = vocab.serialize();
  auto back = Vocabulary::parse(text);
  CHECK(back.serialize() == text);
  CHECK(back.num_reserved() == vocab.num_reserved());
  CHECK(back.fingerprint() == vocab.fingerprint());
  CHECK(vocab.token(0) == "<pad>");
  CHECK(vocab.token(3) == "<unk>");
  CHECK_THROWS_AS(vocab.language_id("fr"), ConfigError);
}

TEST_CASE("mixed-language encoder vocabulary") {
  auto tok = toy_tokenizers();
  const auto& enc = tok.encoder_vocab();
  bool has_en = false, has_es = false;
  for (const auto& t : enc.tokens()) {
    has_en = has_en || t == "dog</w>" || t == "the</w>";
    has_es = has_es || t == "perro</w>" || t == "el</w>";
  }
  CHECK(has_en);
  CHECK(has_es);
  CHECK(enc.size() <= 80);
  CHECK(tok.decoder_vocab(0).size() <= 60);
  CHECK(tok.decoder_model(0).merges() != tok.decoder_model(1).merges());
  // No per-language branching: the one encoder model segments both languages.
  CHECK(concat(apply_bpe(tok.encoder_model(), "perro")) == "perro");
  CHECK(concat(apply_bpe(tok.encoder_model(), "dog")) == "dog");
}

TEST_CASE("encode_for_direction layout") {
  auto tok = toy_tokenizers();
  auto to_en = tok.encode_for_direction("el perro corre", "en");
  auto to_es = tok.encode_for_direction("el perro corre", "es");
  REQUIRE(to_en.ids.size() >= 3);
  CHECK(to_en.ids.front() == tok.encoder_vocab().language_id("en"));
  CHECK(to_en.ids.back() == Vocabulary::kEos);
  CHECK(to_en.target_language == 0);
  REQUIRE(to_en.ids.size() == to_es.ids.size());
  CHECK(to_en.ids.front() != to_es.ids.front());
  CHECK(std::equal(to_en.ids.begin() + 1, to_en.ids.end(), to_es.ids.begin() + 1));
  for (int id : to_en.ids) CHECK(static_cast<std::size_t>(id) < tok.encoder_vocab().size());
  CHECK_THROWS_AS(tok.encode_for_direction("hola", "fr"), ConfigError);
}

TEST_CASE("lowercasing happens before segmentation") {
  auto tok = toy_tokenizers();
  CHECK(text::normalize_words("Bgm Cara") == std::vector<std::string>{"bgm", "cara"});
  CHECK(tok.subword_ids("Bgm Cara") == tok.subword_ids("bgm cara"));
  CHECK(text::lowercase("ÉÑ ДЖ ΣΑ") == "éñ дж σα");
}

TEST_CASE("decoder ids round trip through decode_text") {
  auto tok = toy_tokenizers();
  auto ids = tok.decoder_ids("El Perro grande duerme", 1);
  for (int id : ids) CHECK(id >= static_cast<int>(tok.decoder_vocab(1).num_reserved()));
  ids.push_back(Vocabulary::kEos);
  ids.push_back(tok.decoder_ids("gato", 1).front());
  CHECK(tok.decode_text(ids, 1) == "el perro grande duerme");
}

TEST_CASE("tokenizer set save and load") {
  auto tok = toy_tokenizers();
  auto dir = std::filesystem::temp_directory_path() / "xlsts_tokenizer_test";
  std::filesystem::remove_all(dir);
  tok.save(dir);
  auto back = TokenizerSet::load(dir, {"en", "es"});
  CHECK(back.fingerprints() == tok.fingerprints());
  CHECK(back.encode_for_direction("the cat eats", "es").ids == tok.encode_for_direction("the cat eats", "es").ids);
  std::filesystem::remove_all(dir);
}

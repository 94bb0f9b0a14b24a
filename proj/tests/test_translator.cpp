// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <set>

#include "support/finite_difference.hpp"
#include "xlsts/bleu.hpp"
#include "xlsts/errors.hpp"
#include "xlsts/mt.hpp"
#include "xlsts/mt_training.hpp"
#include "xlsts/ops.hpp"
#include "xlsts/vocab.hpp"

using namespace xlsts;

namespace {

TransformerConfig tiny_config() {
  TransformerConfig c;
  c.d_model = 8;
  c.d_embed = 8;
  c.d_ff = 12;
  c.heads = 2;
  c.encoder_layers = 1;
  c.decoder_layers = 1;
  c.max_len = 16;
  return c;
}

TokenizedSentence sentence(int target, std::vector<int> body, int language_token) {
  TokenizedSentence s;
  s.target_language = target;
  s.ids.push_back(language_token);
  s.ids.insert(s.ids.end(), body.begin(), body.end());
  s.ids.push_back(Vocabulary::kEos);
  return s;
}

// Encoder vocab: 4 specials, <2a>=4, <2b>=5, then words 6..19.
std::vector<TranslationExample> mixed_batch() {
  std::vector<TranslationExample> batch;
  batch.push_back({sentence(1, {6, 7, 8}, 5), {6, 7, 8}, 0});
  batch.push_back({sentence(1, {9, 10}, 5), {9, 4}, 0});
  batch.push_back({sentence(0, {11, 12, 13, 14}, 4), {5, 6, 7}, 1});
  batch.push_back({sentence(0, {15}, 4), {8, 9, 10, 11}, 2});
  batch.push_back({sentence(1, {16, 17}, 5), {10}, 3});
  return batch;
}

double loss_with(const Translator& model, const std::vector<double>& lambda) {
  const auto batch = mixed_batch();
  const auto dirs = translation_directions(2);
  return mt_loss(model, batch, MtLossWeights(lambda), dirs).total.item();
}

}  // namespace

TEST_CASE("direction order") {
  const auto d = translation_directions(2);
  REQUIRE(d.size() == 4);
  CHECK(d[0] == Direction{0, 1});
  CHECK(d[1] == Direction{1, 0});
  CHECK(d[2] == Direction{0, 0});
  CHECK(d[3] == Direction{1, 1});
  CHECK(translation_directions(3).size() == 9);
}

TEST_CASE("transformer config validation") {
  auto c = tiny_config();
  c.heads = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_config();
  c.d_ff = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_NOTHROW(TransformerConfig{}.validate());
}

TEST_CASE("encode shapes, determinism and input errors") {
  Translator model(tiny_config(), {"a", "b"}, 20, {14, 15}, 3);
  const std::vector<int> ids{4, 6, 7, 8, 2};
  auto h = model.encode(ids);
  CHECK(h.shape() == Shape{5, 8});
  auto again = model.encode(ids);
  for (std::size_t i = 0; i < h.numel(); ++i) CHECK(h.at(i) == again.at(i));
  CHECK_THROWS_AS(model.encode(std::vector<int>{4, 20}), InputError);
  CHECK_THROWS_AS(model.encode(std::vector<int>(17, 6)), InputError);

  // Packed rows equal single-sentence encodings.
  const std::vector<std::vector<int>> seqs{{4, 6, 7, 2}, {5, 9, 2}};
  auto packed = model.encode(PackedBatch::pack(seqs));
  auto second = model.encode(seqs[1]);
  for (std::size_t i = 0; i < second.numel(); ++i) CHECK(packed.at(4 * 8 + i) == doctest::Approx(second.at(i)).epsilon(1e-13));
}

TEST_CASE("one encoder serves every direction") {
  Translator model(tiny_config(), {"a", "b"}, 20, {14, 15}, 3);
  const auto enc = model.encoder_parameters();
  std::set<std::string> names;
  for (const auto& p : enc) names.insert(p.name);
  CHECK(names.count("encoder.embedding") == 1);
  for (const auto& n : names) {
    CHECK(n.find(".a.") == std::string::npos);
    CHECK(n.find(".b.") == std::string::npos);
  }
  const auto dirs = translation_directions(2);
  auto grads_for = [&](std::size_t direction) {
    for (auto p : model.parameters().entries()) p.tensor.zero_grad();
    std::vector<TranslationExample> batch;
    for (const auto& ex : mixed_batch()) {
      if (ex.direction == direction) batch.push_back(ex);
    }
    mt_loss(model, batch, MtLossWeights::uniform(4), dirs).total.backward();
    std::set<const void*> touched;
    for (const auto& p : enc) {
      if (p.tensor.has_grad()) touched.insert(p.tensor.node().get());
    }
    return touched;
  };
  const auto forward = grads_for(0);
  const auto backward = grads_for(1);
  CHECK(forward.size() == enc.size());
  CHECK(forward == backward);
}

TEST_CASE("decoder causality and vocabulary switch") {
  Translator model(tiny_config(), {"a", "b"}, 20, {14, 15}, 5);
  const std::vector<int> src{4, 6, 7, 8, 2};
  auto memory = model.encode(src);
  const std::vector<std::size_t> mem_len{src.size()};
  PackedBatch prefix;
  prefix.ids = {Vocabulary::kBos, 6, 7, 8, 9};
  prefix.lengths = {5};
  auto base = model.decode_teacher_forced(memory, mem_len, prefix, 0);
  CHECK(base.shape() == Shape{5, 14});
  CHECK(model.decode_teacher_forced(memory, mem_len, prefix, 1).shape() == Shape{5, 15});
  CHECK_THROWS_AS(model.decode_teacher_forced(memory, mem_len, prefix, 2), ConfigError);

  for (std::size_t j = 1; j < 5; ++j) {
    auto perturbed = prefix;
    perturbed.ids[j] = 13;
    auto out = model.decode_teacher_forced(memory, mem_len, perturbed, 0);
    for (std::size_t i = 0; i < j * 14; ++i) CHECK(std::fabs(out.at(i) - base.at(i)) < 1e-12);
  }
}

TEST_CASE("denoise") {
  auto s = sentence(0, {10, 11, 12, 13, 14, 15, 16, 17, 18, 19}, 4);
  SUBCASE("no noise is the identity") {
    Rng rng(1);
    CHECK(denoise(s, NoiseConfig{0.0, 0}, rng).ids == s.ids);
  }
  SUBCASE("seeded golden") {
    Rng rng(42);
    CHECK(denoise(s, NoiseConfig{0.1, 3}, rng).ids == std::vector<int>{4, 10, 11, 12, 13, 14, 19, 16, 18, 17, 2});
  }
  SUBCASE("language token and EOS survive") {
    Rng rng(7);
    for (int trial = 0; trial < 10000; ++trial) {
      auto out = denoise(s, NoiseConfig{0.9, 5}, rng);
      REQUIRE(out.ids.size() >= 3);
      CHECK(out.ids.front() == 4);
      CHECK(out.ids.back() == Vocabulary::kEos);
    }
  }
  SUBCASE("words move as units") {
    auto multi = sentence(0, {10, 11, 12, 13, 14}, 4);
    auto word_end = [](int id) { return id != 10 && id != 12; };
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
      auto out = denoise(multi, NoiseConfig{0.3, 4}, rng, word_end);
      for (std::size_t i = 1; i + 1 < out.ids.size(); ++i) {
        if (out.ids[i] == 10) CHECK(out.ids[i + 1] == 11);
        if (out.ids[i] == 12) CHECK(out.ids[i + 1] == 13);
      }
    }
  }
  CHECK_THROWS_AS(NoiseConfig({1.0, 0}).validate(), ConfigError);
}

TEST_CASE("mt_loss weights") {
  CHECK_THROWS_AS(MtLossWeights({0, 0, 0, 0}), ConfigError);
  CHECK_THROWS_AS(MtLossWeights({1, -1, 0, 0}), ConfigError);
  auto w = MtLossWeights({2, 2, 0, 4});
  CHECK(w[0] == 0.25);
  CHECK(w[3] == 0.5);
}

TEST_CASE("mt_loss algebra") {
  Translator model(tiny_config(), {"a", "b"}, 20, {14, 15}, 9);
  const auto dirs = translation_directions(2);
  const auto batch = mixed_batch();

  SUBCASE("single direction under uniform weights") {
    std::vector<TranslationExample> only{batch[0], batch[1]};
    auto uniform = mt_loss(model, only, MtLossWeights::uniform(4), dirs);
    auto alone = mt_loss(model, only, MtLossWeights({1, 0, 0, 0}), dirs);
    CHECK(uniform.total.item() == doctest::Approx(0.25 * uniform.per_direction[0]).epsilon(1e-14));
    CHECK(alone.total.item() == alone.per_direction[0]);
    CHECK(alone.per_direction[0] == uniform.per_direction[0]);
  }
  SUBCASE("zero-weight directions are not run") {
    auto r = mt_loss(model, batch, MtLossWeights({1, 0, 0, 0}), dirs);
    CHECK(r.per_direction[1] == 0.0);
    CHECK(r.tokens_per_direction[2] == 0);
    CHECK(r.tokens_per_direction[0] == 7);
  }
  SUBCASE("linear in lambda") {
    const std::vector<double> a{0.1, 0.2, 0.3, 0.4}, b{0.7, 0.0, 0.1, 0.2};
    for (double alpha : {0.0, 0.3, 0.5, 1.0}) {
      std::vector<double> mix(4);
      for (int i = 0; i < 4; ++i) mix[i] = alpha * a[i] + (1 - alpha) * b[i];
      CHECK(std::fabs(loss_with(model, mix) - (alpha * loss_with(model, a) + (1 - alpha) * loss_with(model, b))) <
            1e-10);
    }
  }
  SUBCASE("uniform logits give ln V per token") {
    for (const auto& p : model.parameters().entries()) {
      if (p.name.find(".output.") != std::string::npos) {
        auto t = p.tensor;
        for (auto& v : t.mutable_values()) v = 0.0;
      }
    }
    auto r = mt_loss(model, batch, MtLossWeights::uniform(4), dirs);
    CHECK(r.per_direction[0] == doctest::Approx(std::log(15.0)).epsilon(1e-12));
    CHECK(r.per_direction[1] == doctest::Approx(std::log(14.0)).epsilon(1e-12));
  }
  SUBCASE("mismatched language token") {
    auto bad = batch;
    bad[0].source.target_language = 0;
    CHECK_THROWS_AS(mt_loss(model, bad, MtLossWeights::uniform(4), dirs), DataError);
  }
}

TEST_CASE("translation loss gradient matches finite differences") {
  auto cfg = tiny_config();
  cfg.d_model = 4;
  cfg.d_embed = 6;
  cfg.d_ff = 6;
  Translator model(cfg, {"a", "b"}, 20, {14, 15}, 13);
  const auto dirs = translation_directions(2);
  const auto batch = mixed_batch();
  std::vector<Tensor> inputs;
  for (const auto& p : model.parameters().entries()) inputs.push_back(p.tensor);
  auto r = xlsts::testing::check_gradients(
      [&] { return mt_loss(model, batch, MtLossWeights({0.4, 0.3, 0.2, 0.1}), dirs, 0.1).total; }, inputs);
  CHECK(r.checked > 500);
  CHECK(r.max_relative_error < 1e-5);
}

TEST_CASE("bleu4 reference values") {
  auto one = [](std::string c, std::string r) {
    std::vector<std::string> cs{std::move(c)}, rs{std::move(r)};
    return bleu4(cs, rs);
  };
  CHECK(one("the cat sat", "the cat sat down") == doctest::Approx(0.7165313105737896).epsilon(1e-12));
  CHECK(one("the cat sat on the mat", "the cat sat on the mat") == 1.0);
  CHECK(one("a b c", "x y z") == 0.0);
  CHECK(one("The Cat SAT on the mat", "the cat sat ON THE mat") == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::fabs(one("the quick brown fox jumps", "the quick red fox jumps") - 0.30213753973567675) < 1e-6);
  const std::vector<std::string> cands{"the cat sat on the mat", "a dog runs in the park today", "hello world"};
  const std::vector<std::string> refs{"the cat sat on a mat", "the dog runs in the park", "hello there world"};
  CHECK(std::fabs(bleu4(cands, refs) - 0.5773502691896257) < 1e-6);
  CHECK_THROWS_AS(bleu4(std::vector<std::string>{}, std::vector<std::string>{}), DataError);
  CHECK_THROWS_AS(bleu4(cands, std::vector<std::string>{"x"}), DataError);
}

TEST_CASE("memorized pair is reproduced by greedy decoding") {
  const std::vector<ParallelPair> pairs{{"the big cat sleeps", "el gato grande duerme"},
                                        {"a dog runs", "un perro corre"},
                                        {"the bird sings today", "el pájaro canta hoy"}};
  std::vector<std::vector<std::string>> corpora(2);
  for (const auto& p : pairs) {
    corpora[0].push_back(p.source);
    corpora[1].push_back(p.target);
  }
  auto tok = TokenizerSet::train({"en", "es"}, corpora, TokenizerSettings{});
  auto cfg = tiny_config();
  cfg.d_model = 32;
  cfg.d_embed = 32;
  cfg.d_ff = 64;
  cfg.heads = 4;
  Translator model(cfg, {"en", "es"}, tok.encoder_vocab().size(),
                   {tok.decoder_vocab(0).size(), tok.decoder_vocab(1).size()}, 21);
  auto corpus = build_mt_corpus(tok, pairs, cfg.max_len);
  MtTrainingSettings settings;
  settings.steps = 150;
  settings.batch_tokens = 64;
  settings.learning_rate = 3e-3;
  auto report = train_translator(model, tok, corpus, MtLossWeights::uniform(4), NoiseConfig{0.0, 0}, settings, 5);
  CHECK(report.steps.size() == 150);
  CHECK(report.steps.back().total < report.steps.front().total);

  const std::vector<std::vector<int>> src{tok.encode_for_direction("the big cat sleeps", "es").ids};
  auto out = model.greedy_decode(PackedBatch::pack(src), 1, 10);
  CHECK(tok.decode_text(out[0], 1) == "el gato grande duerme");
  CHECK(evaluate_direction_bleu(model, tok, corpus, Direction{1, 0}) == 1.0);

  auto to_en = model.encode(tok.encode_for_direction("a dog runs", "en").ids);
  auto to_es = model.encode(tok.encode_for_direction("a dog runs", "es").ids);
  double diff = 0.0;
  for (std::size_t i = 0; i < to_en.numel(); ++i) diff += std::fabs(to_en.at(i) - to_es.at(i));
  CHECK(diff > 1e-3);
}

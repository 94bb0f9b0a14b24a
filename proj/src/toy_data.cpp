// SPDX-License-Identifier: Apache-2.0
#include "xlsts/toy_data.hpp"

#include <set>

#include "xlsts/errors.hpp"
#include "xlsts/rng.hpp"

namespace xlsts {

namespace {

struct Word {
  const char* en;
  const char* es;
};

constexpr std::array<std::array<Word, kToyChoices>, kToySlots> kLexicon{{
    {{{"big", "grande"}, {"happy", "feliz"}, {"young", "joven"}, {"blue", "azul"},
      {"green", "verde"}, {"strong", "fuerte"}, {"sad", "triste"}, {"kind", "amable"}}},
    {{{"cat", "el gato"}, {"dog", "el perro"}, {"bird", "el pájaro"}, {"horse", "el caballo"},
      {"child", "el niño"}, {"woman", "la mujer"}, {"man", "el hombre"}, {"girl", "la niña"}}},
    {{{"eats", "come"}, {"sleeps", "duerme"}, {"runs", "corre"}, {"sings", "canta"},
      {"reads", "lee"}, {"plays", "juega"}, {"walks", "camina"}, {"waits", "espera"}}},
    {{{"at home", "en casa"}, {"in the park", "en el parque"}, {"near the river", "cerca del río"},
      {"in the city", "en la ciudad"}, {"at school", "en la escuela"}, {"in the garden", "en el jardín"},
      {"today", "hoy"}, {"at night", "de noche"}}},
}};

ToySentence random_sentence(Rng& rng) {
  ToySentence s;
  for (auto& slot : s.slots) slot = rng.below(kToyChoices);
  return s;
}

}  // namespace

std::string render_toy(const ToySentence& s, std::string_view language) {
  auto word = [&](std::size_t slot) {
    if (s.slots[slot] >= kToyChoices) throw DataError("toy slot choice out of range");
    const auto& w = kLexicon[slot][s.slots[slot]];
    return std::string(language == "en" ? w.en : w.es);
  };
  if (language == "en") return "the " + word(0) + " " + word(1) + " " + word(2) + " " + word(3);
  if (language == "es") return word(1) + " " + word(0) + " " + word(2) + " " + word(3);
  throw ConfigError("toy corpus has no language '" + std::string(language) + "'");
}

std::vector<ToySentence> toy_sentences(std::size_t count, std::uint64_t seed) {
  if (count > 4096) throw ConfigError("toy corpus holds at most 4096 distinct sentences");
  Rng rng(seed);
  std::set<ToySentence> seen;
  std::vector<ToySentence> out;
  while (out.size() < count) {
    auto s = random_sentence(rng);
    if (seen.insert(s).second) out.push_back(s);
  }
  return out;
}

std::vector<ParallelPair> toy_parallel_corpus(std::size_t pairs, std::uint64_t seed) {
  std::vector<ParallelPair> out;
  for (const auto& s : toy_sentences(pairs, seed)) out.push_back({render_toy(s, "en"), render_toy(s, "es")});
  return out;
}

std::vector<ToyStsPair> toy_sts_pairs(const std::vector<ToySentence>& pool, std::size_t count, std::uint64_t seed) {
  if (pool.empty()) throw DataError("empty toy sentence pool");
  Rng rng(seed);
  std::vector<ToyStsPair> out;
  for (std::size_t i = 0; i < count; ++i) {
    ToyStsPair p;
    p.first = pool[rng.below(pool.size())];
    p.second = p.first;
    const std::size_t shared = rng.below(kToySlots + 1);
    std::array<std::size_t, kToySlots> order{0, 1, 2, 3};
    rng.shuffle(order);
    for (std::size_t j = shared; j < kToySlots; ++j) {
      const auto slot = order[j];
      p.second.slots[slot] = (p.first.slots[slot] + 1 + rng.below(kToyChoices - 1)) % kToyChoices;
    }
    p.rating = 1.25 * static_cast<double>(shared);
    out.push_back(p);
  }
  return out;
}

std::vector<StsExample> render_sts(const std::vector<ToyStsPair>& pairs, std::string_view language, Split split) {
  std::vector<StsExample> out;
  for (const auto& p : pairs) out.push_back({render_toy(p.first, language), render_toy(p.second, language), p.rating, split, std::string(language)});
  return out;
}

}  // namespace xlsts

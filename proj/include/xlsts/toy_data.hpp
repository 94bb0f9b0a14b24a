// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "xlsts/data.hpp"

namespace xlsts {

// Synthetic English/Spanish corpus: a sentence is four slot choices
// (adjective, noun, verb, place) rendered word for word in either language.
inline constexpr std::size_t kToySlots = 4;
inline constexpr std::size_t kToyChoices = 8;

struct ToySentence {
  std::array<std::size_t, kToySlots> slots{};

  bool operator==(const ToySentence&) const = default;
  auto operator<=>(const ToySentence&) const = default;
};

// language is "en" or "es"; anything else throws ConfigError.
std::string render_toy(const ToySentence& sentence, std::string_view language);

// `count` distinct sentences drawn with the seed.
std::vector<ToySentence> toy_sentences(std::size_t count, std::uint64_t seed);

// English source, Spanish target.
std::vector<ParallelPair> toy_parallel_corpus(std::size_t pairs, std::uint64_t seed);

struct ToyStsPair {
  ToySentence first;
  ToySentence second;
  double rating = 0.0;  // 1.25 per shared slot
};

// Pairs built around sentences of `pool`: the shared-slot count is drawn
// uniformly from 0..4 and the remaining slots of the second sentence are changed.
std::vector<ToyStsPair> toy_sts_pairs(const std::vector<ToySentence>& pool, std::size_t count, std::uint64_t seed);

std::vector<StsExample> render_sts(const std::vector<ToyStsPair>& pairs, std::string_view language,
                                   Split split = Split::kTrain);

}  // namespace xlsts

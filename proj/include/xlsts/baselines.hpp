// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace xlsts {

// Cosine between word-presence vectors over the pair's union vocabulary, after
// lowercasing and whitespace splitting. 0 when either side has no words.
double baseline_onehot(std::string_view first, std::string_view second);

class WordVectors {
 public:
  WordVectors() = default;
  // Lines "word v1 ... vd"; every line must have the same d. Throws DataError otherwise.
  static WordVectors parse(std::string_view text);
  static WordVectors load(const std::filesystem::path& path);

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return vectors_.size(); }
  const std::vector<double>* find(const std::string& word) const;

 private:
  std::size_t dimension_ = 0;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

struct EmbeddingSimilarity {
  double cosine = 0.0;
  bool fallback = false;  // a sentence had no in-vocabulary word; cosine is 0
};

// Cosine between mean vectors of in-vocabulary words; out-of-vocabulary words are skipped.
EmbeddingSimilarity baseline_embed_avg(std::string_view first, std::string_view second, const WordVectors& vectors);

}  // namespace xlsts

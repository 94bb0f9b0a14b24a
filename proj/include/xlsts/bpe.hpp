// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace xlsts {

// Suffix carried by the last subword of every word.
inline constexpr std::string_view kWordEnd = "</w>";

using MergePair = std::pair<std::string, std::string>;
using WordCounts = std::map<std::string, std::int64_t>;

// Ordered BPE merge list; position is priority (earlier merges apply first).
class SubwordModel {
 public:
  SubwordModel() = default;
  // Throws DataError on duplicate pairs.
  explicit SubwordModel(std::vector<MergePair> merges);

  const std::vector<MergePair>& merges() const { return merges_; }
  // Rank of a pair, or -1 when it is not a merge.
  std::ptrdiff_t rank(const std::string& left, const std::string& right) const;

  // File form: "#version:1" header, then one "left right" line per merge.
  std::string serialize() const;
  static SubwordModel parse(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static SubwordModel load(const std::filesystem::path& path);

 private:
  std::vector<MergePair> merges_;
  std::unordered_map<std::string, std::size_t> ranks_;  // key: left + '\x1f' + right
};

// Greedy most-frequent-pair merging over the word table; frequency ties go to the
// lexicographically smallest pair. Stops after num_merges or when no pair remains.
SubwordModel learn_bpe(const WordCounts& corpus, std::size_t num_merges);

// Segments one word: repeatedly merges the best-ranked adjacent pair, leftmost on
// ties. The last subword carries kWordEnd.
std::vector<std::string> apply_bpe(const SubwordModel& model, std::string_view word);

std::string strip_word_end(std::string_view subword);
bool ends_word(std::string_view subword);

// Joins subwords into whitespace-separated words using the word-end markers.
std::string detokenize(std::span<const std::string> subwords);

}  // namespace xlsts

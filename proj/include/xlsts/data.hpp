// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace xlsts {

struct ParallelPair {
  std::string source;
  std::string target;
};

enum class Split { kTrain, kDev, kTest };

std::string_view split_name(Split split);

struct StsExample {
  std::string sentence1;
  std::string sentence2;
  double gold = 0.0;  // rating in [0, K], or 0/1 for binary tasks
  Split split = Split::kTrain;
  std::string language;  // language of both sentences; empty means the configured default
};

// Two columns, source<TAB>target; an optional "source<TAB>target" header.
// Wrong column counts, empty fields and stray carriage returns raise DataError
// with the 1-based line number.
std::vector<ParallelPair> parse_parallel_tsv(std::string_view text);
std::vector<ParallelPair> read_parallel_tsv(const std::filesystem::path& path);
void write_parallel_tsv(const std::filesystem::path& path, const std::vector<ParallelPair>& pairs);

// Three columns, sentence1<TAB>sentence2<TAB>gold. A first line whose gold column
// is not a number is taken as a header. Every example gets `split`.
std::vector<StsExample> parse_sts_tsv(std::string_view text, Split split = Split::kTrain);
// Pairs to score: two columns, or the three-column layout with gold ignored.
std::vector<StsExample> parse_scoring_tsv(std::string_view text);
std::vector<StsExample> read_sts_tsv(const std::filesystem::path& path, Split split = Split::kTrain);
void write_sts_tsv(const std::filesystem::path& path, const std::vector<StsExample>& examples);

// Throws DataError naming the example index when gold lies outside [0, max_gold].
void check_gold_range(const std::vector<StsExample>& examples, double max_gold);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace xlsts

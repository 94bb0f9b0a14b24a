// SPDX-License-Identifier: Apache-2.0
#include "xlsts/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "xlsts/errors.hpp"

namespace xlsts {

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    auto end = line.find('\t', start);
    if (end == std::string_view::npos) {
      cols.push_back(line.substr(start));
      return cols;
    }
    cols.push_back(line.substr(start, end - start));
    start = end + 1;
  }
}

std::string_view strip_cr(std::string_view line, std::size_t line_no) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (line.find('\r') != std::string_view::npos) {
    throw DataError("line " + std::to_string(line_no) + ": carriage return inside a field");
  }
  return line;
}

bool parse_number(std::string_view s, double& out) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

void check_field(std::string_view field, std::string_view what) {
  if (field.find('\t') != std::string_view::npos || field.find('\n') != std::string_view::npos ||
      field.find('\r') != std::string_view::npos) {
    throw DataError(std::string(what) + " contains a tab or newline: '" + std::string(field) + "'");
  }
  if (field.empty()) throw DataError(std::string(what) + " is empty");
}

}  // namespace

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "train";
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<ParallelPair> parse_parallel_tsv(std::string_view text) {
  std::vector<ParallelPair> pairs;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = strip_cr(lines[i], i + 1);
    if (line.empty()) continue;
    const auto cols = split_tabs(line);
    if (cols.size() != 2) {
      throw DataError("line " + std::to_string(i + 1) + ": expected 2 tab-separated columns, found " +
                      std::to_string(cols.size()));
    }
    if (i == 0 && cols[0] == "source" && cols[1] == "target") continue;
    if (cols[0].empty() || cols[1].empty()) throw DataError("line " + std::to_string(i + 1) + ": empty sentence");
    pairs.push_back({std::string(cols[0]), std::string(cols[1])});
  }
  if (pairs.empty()) throw DataError("parallel corpus has no sentence pairs");
  return pairs;
}

std::vector<ParallelPair> read_parallel_tsv(const std::filesystem::path& path) {
  return parse_parallel_tsv(read_text_file(path));
}

void write_parallel_tsv(const std::filesystem::path& path, const std::vector<ParallelPair>& pairs) {
  std::string out;
  for (const auto& p : pairs) {
    check_field(p.source, "source sentence");
    check_field(p.target, "target sentence");
    out += p.source + "\t" + p.target + "\n";
  }
  write_text_file(path, out);
}

std::vector<StsExample> parse_sts_tsv(std::string_view text, Split split) {
  std::vector<StsExample> examples;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = strip_cr(lines[i], i + 1);
    if (line.empty()) continue;
    const auto cols = split_tabs(line);
    if (cols.size() != 3) {
      throw DataError("line " + std::to_string(i + 1) + ": expected 3 tab-separated columns, found " +
                      std::to_string(cols.size()));
    }
    double gold = 0.0;
    if (!parse_number(cols[2], gold)) {
      if (examples.empty() && i == 0) continue;
      throw DataError("line " + std::to_string(i + 1) + ": gold '" + std::string(cols[2]) + "' is not a number");
    }
    if (cols[0].empty() || cols[1].empty()) throw DataError("line " + std::to_string(i + 1) + ": empty sentence");
    examples.push_back({std::string(cols[0]), std::string(cols[1]), gold, split, {}});
  }
  if (examples.empty()) throw DataError("STS data has no sentence pairs");
  return examples;
}

std::vector<StsExample> parse_scoring_tsv(std::string_view text) {
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = strip_cr(lines[i], i + 1);
    if (line.empty()) continue;
    if (split_tabs(line).size() == 3) return parse_sts_tsv(text, Split::kTest);
    break;
  }
  std::vector<StsExample> out;
  for (auto& p : parse_parallel_tsv(text)) out.push_back({std::move(p.source), std::move(p.target), 0.0, Split::kTest, {}});
  return out;
}

std::vector<StsExample> read_sts_tsv(const std::filesystem::path& path, Split split) {
  return parse_sts_tsv(read_text_file(path), split);
}

void write_sts_tsv(const std::filesystem::path& path, const std::vector<StsExample>& examples) {
  std::string out;
  for (const auto& e : examples) {
    check_field(e.sentence1, "sentence1");
    check_field(e.sentence2, "sentence2");
    std::ostringstream gold;
    gold.precision(17);
    gold << e.gold;
    out += e.sentence1 + "\t" + e.sentence2 + "\t" + gold.str() + "\n";
  }
  write_text_file(path, out);
}

void check_gold_range(const std::vector<StsExample>& examples, double max_gold) {
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const double g = examples[i].gold;
    if (!(g >= 0.0 && g <= max_gold)) {
      throw DataError("example " + std::to_string(i + 1) + ": gold " + std::to_string(g) + " outside [0, " +
                      std::to_string(max_gold) + "]");
    }
  }
}

}  // namespace xlsts

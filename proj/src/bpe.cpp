// SPDX-License-Identifier: Apache-2.0
#include "xlsts/bpe.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "xlsts/errors.hpp"
#include "xlsts/text.hpp"

namespace xlsts {

namespace {

std::string pair_key(const std::string& left, const std::string& right) { return left + '\x1f' + right; }

std::vector<std::string> initial_symbols(std::string_view word) {
  auto symbols = text::utf8_chars(word);
  symbols.back() += kWordEnd;
  return symbols;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << bytes;
}

}  // namespace

SubwordModel::SubwordModel(std::vector<MergePair> merges) : merges_(std::move(merges)) {
  for (std::size_t i = 0; i < merges_.size(); ++i) {
    const auto& [l, r] = merges_[i];
    if (l.empty() || r.empty()) throw DataError("empty symbol in merge " + std::to_string(i));
    if (!ranks_.emplace(pair_key(l, r), i).second) {
      throw DataError("duplicate merge pair '" + l + " " + r + "'");
    }
  }
}

std::ptrdiff_t SubwordModel::rank(const std::string& left, const std::string& right) const {
  auto it = ranks_.find(pair_key(left, right));
  return it == ranks_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

std::string SubwordModel::serialize() const {
  std::string out = "#version:1\n";
  for (const auto& [l, r] : merges_) out += l + ' ' + r + '\n';
  return out;
}

SubwordModel SubwordModel::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "#version:1") throw DataError("subword model: missing #version:1 header");
  std::vector<MergePair> merges;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto space = line.find(' ');
    if (space == std::string::npos || line.find(' ', space + 1) != std::string::npos) {
      throw DataError("subword model line " + std::to_string(lineno) + ": expected 'left right'");
    }
    merges.emplace_back(line.substr(0, space), line.substr(space + 1));
  }
  return SubwordModel(std::move(merges));
}

void SubwordModel::save(const std::filesystem::path& path) const { write_file(path, serialize()); }

SubwordModel SubwordModel::load(const std::filesystem::path& path) { return parse(read_file(path)); }

SubwordModel learn_bpe(const WordCounts& corpus, std::size_t num_merges) {
  if (corpus.empty()) throw DataError("learn_bpe: empty corpus");
  struct Entry {
    std::vector<std::string> symbols;
    std::int64_t count;
  };
  std::vector<Entry> words;
  for (const auto& [word, count] : corpus) {
    if (word.empty()) throw DataError("learn_bpe: empty word in corpus");
    if (count <= 0) throw DataError("learn_bpe: non-positive count for '" + word + "'");
    words.push_back({initial_symbols(word), count});
  }

  std::vector<MergePair> merges;
  while (merges.size() < num_merges) {
    std::map<MergePair, std::int64_t> counts;
    for (const auto& w : words) {
      for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) counts[{w.symbols[i], w.symbols[i + 1]}] += w.count;
    }
    if (counts.empty()) break;
    // Ordered map: the first maximum is the lexicographically smallest tied pair.
    auto best = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    const MergePair pair = best->first;
    const std::string merged = pair.first + pair.second;
    for (auto& w : words) {
      std::vector<std::string> next;
      next.reserve(w.symbols.size());
      for (std::size_t i = 0; i < w.symbols.size(); ++i) {
        if (i + 1 < w.symbols.size() && w.symbols[i] == pair.first && w.symbols[i + 1] == pair.second) {
          next.push_back(merged);
          ++i;
        } else {
          next.push_back(std::move(w.symbols[i]));
        }
      }
      w.symbols = std::move(next);
    }
    merges.push_back(pair);
  }
  return SubwordModel(std::move(merges));
}

std::vector<std::string> apply_bpe(const SubwordModel& model, std::string_view word) {
  if (word.empty()) throw InputError("apply_bpe: empty word");
  auto symbols = initial_symbols(word);
  while (symbols.size() > 1) {
    std::ptrdiff_t best_rank = -1;
    std::size_t best_pos = 0;
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      const auto r = model.rank(symbols[i], symbols[i + 1]);
      if (r >= 0 && (best_rank < 0 || r < best_rank)) {
        best_rank = r;
        best_pos = i;
      }
    }
    if (best_rank < 0) break;
    symbols[best_pos] += symbols[best_pos + 1];
    symbols.erase(symbols.begin() + static_cast<std::ptrdiff_t>(best_pos) + 1);
  }
  return symbols;
}

bool ends_word(std::string_view subword) {
  return subword.size() >= kWordEnd.size() && subword.substr(subword.size() - kWordEnd.size()) == kWordEnd;
}

std::string strip_word_end(std::string_view subword) {
  if (ends_word(subword)) subword.remove_suffix(kWordEnd.size());
  return std::string(subword);
}

std::string detokenize(std::span<const std::string> subwords) {
  std::string out;
  bool at_word_start = true;
  for (const auto& s : subwords) {
    if (at_word_start && !out.empty()) out += ' ';
    out += strip_word_end(s);
    at_word_start = ends_word(s);
  }
  return out;
}

}  // namespace xlsts

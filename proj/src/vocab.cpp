// SPDX-License-Identifier: Apache-2.0
#include "xlsts/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "xlsts/errors.hpp"
#include "xlsts/text.hpp"

namespace xlsts {

namespace {

bool is_language_token(std::string_view t) {
  return t.size() > 3 && t.substr(0, 2) == "<2" && t.back() == '>';
}

}  // namespace

std::string language_token(std::string_view language) { return "<2" + std::string(language) + ">"; }

std::vector<std::string> reserved_tokens(std::span<const std::string> languages) {
  std::vector<std::string> out{std::string(kPadToken), std::string(kBosToken), std::string(kEosToken),
                               std::string(kUnkToken)};
  for (const auto& l : languages) out.push_back(language_token(l));
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::size_t num_reserved)
    : tokens_(std::move(tokens)), num_reserved_(num_reserved) {
  if (num_reserved_ < 4 || num_reserved_ > tokens_.size() || tokens_[kPad] != kPadToken ||
      tokens_[kBos] != kBosToken || tokens_[kEos] != kEosToken || tokens_[kUnk] != kUnkToken) {
    throw DataError("vocabulary must start with <pad> <s> </s> <unk>");
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw DataError("vocabulary: empty token at id " + std::to_string(i));
    if (!ids_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw DataError("vocabulary: duplicate token '" + tokens_[i] + "'");
    }
  }
}

int Vocabulary::id(std::string_view token) const { return find(token).value_or(kUnk); }

std::optional<int> Vocabulary::find(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) throw InputError("token id out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

int Vocabulary::language_id(std::string_view language) const {
  auto id = find(language_token(language));
  if (!id || static_cast<std::size_t>(*id) >= num_reserved_) {
    throw ConfigError("unknown language '" + std::string(language) + "'");
  }
  return *id;
}

std::string Vocabulary::serialize() const {
  std::string out;
  for (std::size_t i = 0; i < tokens_.size(); ++i) out += tokens_[i] + '\t' + std::to_string(i) + '\n';
  return out;
}

Vocabulary Vocabulary::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<std::string> tokens;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError("vocabulary line " + std::to_string(tokens.size() + 1) + ": no tab");
    const auto id = line.substr(tab + 1);
    if (id != std::to_string(tokens.size())) {
      throw DataError("vocabulary line " + std::to_string(tokens.size() + 1) + ": ids must be dense and ordered");
    }
    tokens.push_back(line.substr(0, tab));
  }
  // Reserved block: the four specials followed by the language tokens.
  std::size_t reserved = std::min<std::size_t>(4, tokens.size());
  while (reserved < tokens.size() && is_language_token(tokens[reserved])) ++reserved;
  return Vocabulary(std::move(tokens), reserved);
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << serialize();
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string Vocabulary::fingerprint() const { return text::fingerprint(serialize()); }

Vocabulary build_vocab(const std::map<std::string, std::int64_t>& subword_counts, std::size_t max_size,
                       std::vector<std::string> reserved) {
  if (max_size <= reserved.size()) {
    throw ConfigError("vocabulary cap " + std::to_string(max_size) + " leaves no room beyond " +
                      std::to_string(reserved.size()) + " reserved tokens");
  }
  std::vector<std::pair<std::string, std::int64_t>> ranked;
  for (const auto& [tok, count] : subword_counts) {
    if (std::find(reserved.begin(), reserved.end(), tok) == reserved.end()) ranked.emplace_back(tok, count);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  const std::size_t keep = std::min(ranked.size(), max_size - reserved.size());
  const std::size_t num_reserved = reserved.size();
  auto tokens = std::move(reserved);
  for (std::size_t i = 0; i < keep; ++i) tokens.push_back(ranked[i].first);
  return Vocabulary(std::move(tokens), num_reserved);
}

}  // namespace xlsts

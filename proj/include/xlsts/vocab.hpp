// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace xlsts {

inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kBosToken = "<s>";
inline constexpr std::string_view kEosToken = "</s>";
inline constexpr std::string_view kUnkToken = "<unk>";

std::string language_token(std::string_view language);

// PAD, BOS, EOS, UNK, then one language token per language, in that order.
std::vector<std::string> reserved_tokens(std::span<const std::string> languages);

// Dense token <-> id map with reserved tokens at the lowest ids.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  Vocabulary() = default;
  Vocabulary(std::vector<std::string> tokens, std::size_t num_reserved);

  std::size_t size() const { return tokens_.size(); }
  std::size_t num_reserved() const { return num_reserved_; }
  // Unknown tokens map to kUnk.
  int id(std::string_view token) const;
  std::optional<int> find(std::string_view token) const;
  const std::string& token(int id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }
  // Throws ConfigError when the language has no token.
  int language_id(std::string_view language) const;

  // File form: one "token<TAB>id" line per entry, reserved tokens first.
  std::string serialize() const;
  static Vocabulary parse(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);
  std::string fingerprint() const;

 private:
  std::vector<std::string> tokens_;
  std::size_t num_reserved_ = 0;
  std::unordered_map<std::string, int> ids_;
};

// Keeps the top (max_size - reserved) subwords by frequency, ties broken
// lexicographically. Throws ConfigError when max_size cannot hold the reserved set.
Vocabulary build_vocab(const std::map<std::string, std::int64_t>& subword_counts, std::size_t max_size,
                       std::vector<std::string> reserved);

}  // namespace xlsts

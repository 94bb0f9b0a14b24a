// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace xlsts::text {

// Lowercases ASCII, Latin-1, Greek and Cyrillic letters; other bytes pass through.
std::string lowercase(std::string_view s);

// Splits on ASCII whitespace, dropping empty fields.
std::vector<std::string> split_words(std::string_view s);

// Lowercase then whitespace-tokenize: the preprocessing shared by every model path.
std::vector<std::string> normalize_words(std::string_view s);

// UTF-8 code points as separate strings; invalid bytes become single-byte units.
std::vector<std::string> utf8_chars(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// FNV-1a 64-bit digest as 16 hex digits.
std::string fingerprint(std::string_view bytes);

}  // namespace xlsts::text

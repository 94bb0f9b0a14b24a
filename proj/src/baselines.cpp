// SPDX-License-Identifier: Apache-2.0
#include "xlsts/baselines.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include "xlsts/data.hpp"
#include "xlsts/errors.hpp"
#include "xlsts/text.hpp"

namespace xlsts {

double baseline_onehot(std::string_view first, std::string_view second) {
  const auto a = text::normalize_words(first), b = text::normalize_words(second);
  const std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  if (sa.empty() || sb.empty()) return 0.0;
  std::size_t shared = 0;
  for (const auto& w : sa) shared += sb.count(w);
  return static_cast<double>(shared) / std::sqrt(static_cast<double>(sa.size() * sb.size()));
}

WordVectors WordVectors::parse(std::string_view text) {
  WordVectors out;
  std::size_t line_no = 0, start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    const auto fields = text::split_words(line);
    if (fields.empty()) continue;
    if (fields.size() < 2) throw DataError("vector file line " + std::to_string(line_no) + ": no values");
    std::vector<double> v;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      double x = 0.0;
      const auto& f = fields[i];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), x);
      if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(x)) {
        throw DataError("vector file line " + std::to_string(line_no) + ": bad value '" + f + "'");
      }
      v.push_back(x);
    }
    if (out.dimension_ == 0) out.dimension_ = v.size();
    if (v.size() != out.dimension_) {
      throw DataError("vector file line " + std::to_string(line_no) + ": expected " +
                      std::to_string(out.dimension_) + " values");
    }
    out.vectors_[text::lowercase(fields[0])] = std::move(v);
  }
  if (out.vectors_.empty()) throw DataError("vector file has no vectors");
  return out;
}

WordVectors WordVectors::load(const std::filesystem::path& path) { return parse(read_text_file(path)); }

const std::vector<double>* WordVectors::find(const std::string& word) const {
  auto it = vectors_.find(word);
  return it == vectors_.end() ? nullptr : &it->second;
}

EmbeddingSimilarity baseline_embed_avg(std::string_view first, std::string_view second, const WordVectors& vectors) {
  auto average = [&](std::string_view s, std::vector<double>& mean) {
    mean.assign(vectors.dimension(), 0.0);
    std::size_t n = 0;
    for (const auto& w : text::normalize_words(s)) {
      if (const auto* v = vectors.find(w)) {
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += (*v)[i];
        ++n;
      }
    }
    for (auto& x : mean) x /= static_cast<double>(n ? n : 1);
    return n > 0;
  };
  std::vector<double> a, b;
  const bool ha = average(first, a), hb = average(second, b);
  if (!ha || !hb) return {0.0, true};
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return {0.0, true};
  return {dot / std::sqrt(na * nb), false};
}

}  // namespace xlsts

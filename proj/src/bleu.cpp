// SPDX-License-Identifier: Apache-2.0
#include "xlsts/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "xlsts/errors.hpp"
#include "xlsts/text.hpp"

namespace xlsts {

namespace {

using Ngrams = std::map<std::vector<std::string>, int>;

Ngrams count_ngrams(const std::vector<std::string>& words, std::size_t n) {
  Ngrams out;
  for (std::size_t i = 0; i + n <= words.size(); ++i) ++out[{words.begin() + i, words.begin() + i + n}];
  return out;
}

}  // namespace

double bleu4(std::span<const std::string> candidates, std::span<const std::string> references) {
  if (candidates.empty()) throw DataError("BLEU over an empty corpus");
  if (candidates.size() != references.size()) {
    throw DataError("BLEU needs one reference per candidate, got " + std::to_string(candidates.size()) + " and " +
                    std::to_string(references.size()));
  }
  constexpr std::size_t kOrder = 4;
  std::vector<double> correct(kOrder, 0.0), total(kOrder, 0.0);
  double cand_len = 0.0, ref_len = 0.0;
  for (std::size_t s = 0; s < candidates.size(); ++s) {
    const auto c = text::normalize_words(candidates[s]);
    const auto r = text::normalize_words(references[s]);
    cand_len += static_cast<double>(c.size());
    ref_len += static_cast<double>(r.size());
    for (std::size_t n = 1; n <= kOrder; ++n) {
      const auto cn = count_ngrams(c, n);
      const auto rn = count_ngrams(r, n);
      for (const auto& [gram, count] : cn) {
        auto it = rn.find(gram);
        if (it != rn.end()) correct[n - 1] += std::min(count, it->second);
        total[n - 1] += count;
      }
    }
  }
  if (std::all_of(correct.begin(), correct.end(), [](double c) { return c == 0.0; })) return 0.0;

  double log_sum = 0.0, smooth = 1.0;
  std::size_t effective = 0;
  for (std::size_t n = 0; n < kOrder; ++n) {
    if (total[n] == 0.0) break;
    effective = n + 1;
    if (correct[n] == 0.0) {
      smooth *= 2.0;
      log_sum += std::log(1.0 / (smooth * total[n]));
    } else {
      log_sum += std::log(correct[n] / total[n]);
    }
  }
  const double bp = cand_len < ref_len ? std::exp(1.0 - ref_len / cand_len) : 1.0;
  return bp * std::exp(log_sum / static_cast<double>(effective));
}

}  // namespace xlsts

// SPDX-License-Identifier: Apache-2.0
#include "xlsts/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "xlsts/errors.hpp"

namespace xlsts {

double evaluate_pearson(std::span<const double> predictions, std::span<const double> golds) {
  if (predictions.size() != golds.size()) throw DataError("pearson: prediction and gold counts differ");
  if (predictions.size() < 2) throw DataError("pearson needs at least two pairs");
  const double n = static_cast<double>(predictions.size());
  const double mx = std::accumulate(predictions.begin(), predictions.end(), 0.0) / n;
  const double my = std::accumulate(golds.begin(), golds.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double dx = predictions[i] - mx, dy = golds[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw NumericError("pearson is undefined for a constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double evaluate_auc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw DataError("auc: score and label counts differ");
  std::size_t positives = 0;
  for (double l : labels) {
    if (l != 0.0 && l != 1.0) throw DataError("auc labels must be 0 or 1, got " + std::to_string(l));
    positives += l == 1.0;
  }
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) throw NumericError("auc needs both classes");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double positive_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1.0) positive_rank_sum += rank;
    }
    i = j;
  }
  const double p = static_cast<double>(positives), q = static_cast<double>(negatives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

}  // namespace xlsts

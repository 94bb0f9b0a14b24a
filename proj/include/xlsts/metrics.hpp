// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

namespace xlsts {

// Sample Pearson correlation. Throws DataError for unequal or fewer than two
// entries, NumericError when either side has zero variance.
double evaluate_pearson(std::span<const double> predictions, std::span<const double> golds);

// Rank-based ROC AUC (Mann-Whitney with average ranks, so ties count 0.5).
// Labels are 0/1. Throws DataError for unequal lengths or labels other than 0/1,
// NumericError when only one class is present.
double evaluate_auc(std::span<const double> scores, std::span<const double> labels);

}  // namespace xlsts

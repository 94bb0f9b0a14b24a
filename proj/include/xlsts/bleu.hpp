// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>

namespace xlsts {

// Corpus BLEU-4 in [0, 1] over lowercased whitespace tokens, with brevity
// penalty. Orders without candidate n-grams are left out of the geometric mean;
// an order with n-grams but no matches gets exponentially decaying pseudo
// counts. Throws DataError for empty or unequal lists.
double bleu4(std::span<const std::string> candidates, std::span<const std::string> references);

}  // namespace xlsts

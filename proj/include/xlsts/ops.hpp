// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "xlsts/tensor.hpp"

namespace xlsts {

class Rng;

// Matrix product of [n x k] and [k x m].
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// Elementwise. The second operand may match the first's shape, be a single
// element (scalar broadcast), or hold cols() entries (row broadcast over a
// rank-2 first operand).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

Tensor tanh(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor abs(const Tensor& x);
Tensor exp(const Tensor& x);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

// Max-shifted softmax along `axis` (rank 1: axis 0; rank 2: axis 0 or 1).
Tensor softmax(const Tensor& x, std::size_t axis);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
// Column-wise reductions of a rank-2 tensor to [1 x cols].
Tensor mean_rows(const Tensor& x);
Tensor max_rows(const Tensor& x);

Tensor reshape(const Tensor& x, Shape shape);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count);
// Embedding lookup: row ids[i] of `table` becomes row i of the result.
Tensor gather_rows(const Tensor& table, std::span<const int> ids);

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double epsilon = 1e-5);

// Multi-head scaled dot-product attention over packed sequences. Rows of q are
// grouped into segments of q_lengths, rows of k/v into kv_lengths (same number
// of segments); segment s of q attends only to segment s of k/v. With causal,
// each segment must be square and query i sees keys <= i.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads,
                 std::span<const std::size_t> q_lengths, std::span<const std::size_t> kv_lengths,
                 bool causal);

// Row-wise projection of h onto `onto`: ((h.o)/(o.o)) o, or 0 when |o| < 1e-12.
Tensor row_projection(const Tensor& h, const Tensor& onto);

// Mean token cross-entropy of rank-2 logits against target ids.
Tensor cross_entropy(const Tensor& logits, std::span<const int> targets, double label_smoothing = 0.0);

// KL(target || predicted) with predicted clamped below by `floor`; 0 ln 0 = 0.
Tensor kl_divergence(std::span<const double> target, const Tensor& predicted, double floor = 1e-12);

// Inverted dropout; identity when probability == 0.
Tensor dropout(const Tensor& x, double probability, Rng& rng);

}  // namespace xlsts

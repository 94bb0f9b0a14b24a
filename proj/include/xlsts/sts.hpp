// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xlsts/parameters.hpp"

namespace xlsts {

// Probabilities over rating levels 0..K.
class RatingDistribution {
 public:
  // Throws DataError unless entries are >= 0, finite, at least two, and sum to 1 within 1e-9.
  explicit RatingDistribution(std::vector<double> probabilities);

  std::size_t levels() const { return p_.size(); }
  std::size_t max_level() const { return p_.size() - 1; }
  std::span<const double> values() const { return p_; }
  double operator[](std::size_t i) const { return p_.at(i); }

 private:
  std::vector<double> p_;
};

// Gold rating y in [0, K] as mass split between floor(y) and floor(y)+1.
// Throws DataError outside the range.
RatingDistribution sparse_target(double y, std::size_t max_level);

// sum_j j * p_j.
double predicted_rating(std::span<const double> p);
inline double predicted_rating(const RatingDistribution& p) { return predicted_rating(p.values()); }

// KL(target || predicted) with predicted clamped at 1e-12.
Tensor kl_loss(const RatingDistribution& target, const Tensor& predicted);

enum class IntraAggregator { kAttention, kMean, kMax };

std::string_view aggregator_name(IntraAggregator a);
// Throws ConfigError for names other than attention, mean, max.
IntraAggregator parse_aggregator(std::string_view name);

struct StsConfig {
  std::size_t max_level = 5;        // K; the output layer has K + 1 units
  std::size_t hidden = 300;         // relu layer of the output stage
  std::size_t attention_width = 0;  // d_a; 0 means d_model
  std::size_t match_width = 0;      // F_match widths; 0 means d_model
  std::size_t compare_width = 0;    // F_comp widths; 0 means d_model
  IntraAggregator aggregator = IntraAggregator::kAttention;

  void validate() const;
};

struct Alignment {
  Tensor first;          // [n x d]: for each row of h1, its soft-aligned summary of h2
  Tensor second;         // [m x d]
  Tensor scores;         // [n x m] e_ij
};

struct Decomposition {
  Tensor similar;     // projection onto the matching vector
  Tensor dissimilar;  // remainder, orthogonal to it
};

struct PairRepresentation {
  Tensor intra_first, intra_second;  // [1 x d]
  Tensor inter_first, inter_second;  // [1 x d_comp]
  Tensor features;                   // [1 x (2 d + 2 d_comp)]: |v1 - v2|, v1 * v2, inter1, inter2
};

// Two tanh layers, both of output width `width`.
struct FeedForward2 {
  Linear first, second;

  static FeedForward2 create(ParameterSet& params, const std::string& name, std::size_t in, std::size_t width, Rng& rng);
  Tensor operator()(const Tensor& x) const;
};

// Matching head over encoder states of a sentence pair.
class StsHead {
 public:
  StsHead(StsConfig config, std::size_t d_model, std::uint64_t seed);

  const StsConfig& config() const { return config_; }
  std::size_t d_model() const { return d_model_; }
  std::size_t representation_width() const { return 2 * d_model_ + 2 * compare_width_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

  // Attention weights [n x 1] of the self-attentive pooling.
  Tensor intra_weights(const Tensor& h) const;
  // [1 x d] pooled vector using the configured aggregator. Throws InputError on an empty sequence.
  Tensor intra_attention(const Tensor& h) const;
  Alignment inter_align(const Tensor& h1, const Tensor& h2) const;
  static Decomposition orthogonal_decompose(const Tensor& h, const Tensor& matched);
  // mean_i F_comp([h+_i, h-_i]) -> [1 x d_comp]
  Tensor compose_inter(const Decomposition& parts) const;
  PairRepresentation represent(const Tensor& h1, const Tensor& h2) const;
  // Rows of `features` -> rows of K + 1 probabilities.
  Tensor output_distribution(const Tensor& features) const;
  // [1 x (K + 1)]
  Tensor forward(const Tensor& h1, const Tensor& h2) const;

 private:
  StsConfig config_;
  std::size_t d_model_;
  std::size_t compare_width_;
  ParameterSet params_;
  Tensor attention_w_, attention_b_, attention_v_;
  FeedForward2 match_;
  FeedForward2 compare_;
  Linear hidden_;
  Linear output_;
};

}  // namespace xlsts

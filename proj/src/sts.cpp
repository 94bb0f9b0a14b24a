// SPDX-License-Identifier: Apache-2.0
#include "xlsts/sts.hpp"

#include <cmath>

#include "xlsts/errors.hpp"
#include "xlsts/ops.hpp"

namespace xlsts {

RatingDistribution::RatingDistribution(std::vector<double> probabilities) : p_(std::move(probabilities)) {
  if (p_.size() < 2) throw DataError("a rating distribution needs at least two levels");
  double total = 0.0;
  for (double p : p_) {
    if (!std::isfinite(p) || p < 0.0) throw DataError("rating probabilities must be finite and nonnegative");
    total += p;
  }
  if (std::fabs(total - 1.0) > 1e-9) throw DataError("rating probabilities sum to " + std::to_string(total));
}

RatingDistribution sparse_target(double y, std::size_t max_level) {
  const double k = static_cast<double>(max_level);
  if (!(y >= 0.0 && y <= k)) {
    throw DataError("rating " + std::to_string(y) + " outside [0, " + std::to_string(max_level) + "]");
  }
  std::vector<double> p(max_level + 1, 0.0);
  const double fl = std::floor(y);
  const auto i = static_cast<std::size_t>(fl);
  if (i == max_level) {
    p[i] = 1.0;
  } else {
    p[i] = fl + 1.0 - y;
    p[i + 1] = y - fl;
  }
  return RatingDistribution(std::move(p));
}

double predicted_rating(std::span<const double> p) {
  double y = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) y += static_cast<double>(j) * p[j];
  return y;
}

Tensor kl_loss(const RatingDistribution& target, const Tensor& predicted) {
  if (predicted.numel() != target.levels()) {
    throw DimensionError("prediction has " + std::to_string(predicted.numel()) + " levels, target " +
                         std::to_string(target.levels()));
  }
  return kl_divergence(target.values(), predicted, 1e-12);
}

std::string_view aggregator_name(IntraAggregator a) {
  switch (a) {
    case IntraAggregator::kAttention: return "attention";
    case IntraAggregator::kMean: return "mean";
    case IntraAggregator::kMax: return "max";
  }
  return "attention";
}

IntraAggregator parse_aggregator(std::string_view name) {
  if (name == "attention") return IntraAggregator::kAttention;
  if (name == "mean") return IntraAggregator::kMean;
  if (name == "max") return IntraAggregator::kMax;
  throw ConfigError("unknown intra aggregator '" + std::string(name) + "'");
}

void StsConfig::validate() const {
  if (max_level < 1) throw ConfigError("max_level must be at least 1");
  if (hidden == 0) throw ConfigError("hidden width must be positive");
}

FeedForward2 FeedForward2::create(ParameterSet& params, const std::string& name, std::size_t in, std::size_t width,
                                  Rng& rng) {
  return {Linear::create(params, name + ".layer1", in, width, rng),
          Linear::create(params, name + ".layer2", width, width, rng)};
}

Tensor FeedForward2::operator()(const Tensor& x) const { return tanh(second(tanh(first(x)))); }

StsHead::StsHead(StsConfig config, std::size_t d_model, std::uint64_t seed) : config_(config), d_model_(d_model) {
  config_.validate();
  if (d_model_ == 0) throw ConfigError("d_model must be positive");
  const std::size_t da = config_.attention_width ? config_.attention_width : d_model_;
  const std::size_t dm = config_.match_width ? config_.match_width : d_model_;
  compare_width_ = config_.compare_width ? config_.compare_width : d_model_;
  Rng rng(seed);
  attention_w_ = params_.xavier("sts.intra.weight", d_model_, da, rng);
  attention_b_ = params_.constant("sts.intra.bias", {da}, 0.0);
  attention_v_ = params_.xavier("sts.intra.v", da, 1, rng);
  match_ = FeedForward2::create(params_, "sts.match", d_model_, dm, rng);
  compare_ = FeedForward2::create(params_, "sts.compare", 2 * d_model_, compare_width_, rng);
  hidden_ = Linear::create(params_, "sts.output.hidden", representation_width(), config_.hidden, rng);
  output_ = Linear::create(params_, "sts.output.levels", config_.hidden, config_.max_level + 1, rng);
}

Tensor StsHead::intra_weights(const Tensor& h) const {
  if (h.rank() != 2 || h.rows() == 0) throw InputError("intra attention needs a nonempty [n x d] sequence");
  auto scores = matmul(tanh(add(matmul(h, attention_w_), attention_b_)), attention_v_);
  return softmax(scores, 0);
}

Tensor StsHead::intra_attention(const Tensor& h) const {
  if (h.rank() != 2) throw InputError("intra attention needs a nonempty [n x d] sequence");
  switch (config_.aggregator) {
    case IntraAggregator::kMean: return mean_rows(h);
    case IntraAggregator::kMax: return max_rows(h);
    case IntraAggregator::kAttention: break;
  }
  return matmul(transpose(intra_weights(h)), h);
}

Alignment StsHead::inter_align(const Tensor& h1, const Tensor& h2) const {
  if (h1.rank() != 2 || h2.rank() != 2) throw InputError("inter alignment needs [n x d] sequences");
  if (h1.cols() != h2.cols()) throw DimensionError("inter alignment: sentence widths differ");
  Alignment a;
  a.scores = matmul(match_(h1), transpose(match_(h2)));
  a.first = matmul(softmax(a.scores, 1), h2);
  a.second = matmul(transpose(softmax(a.scores, 0)), h1);
  return a;
}

Decomposition StsHead::orthogonal_decompose(const Tensor& h, const Tensor& matched) {
  Decomposition d;
  d.similar = row_projection(h, matched);
  d.dissimilar = sub(h, d.similar);
  return d;
}

Tensor StsHead::compose_inter(const Decomposition& parts) const {
  return mean_rows(compare_(concat_cols({parts.similar, parts.dissimilar})));
}

PairRepresentation StsHead::represent(const Tensor& h1, const Tensor& h2) const {
  PairRepresentation r;
  r.intra_first = intra_attention(h1);
  r.intra_second = intra_attention(h2);
  const auto align = inter_align(h1, h2);
  r.inter_first = compose_inter(orthogonal_decompose(h1, align.first));
  r.inter_second = compose_inter(orthogonal_decompose(h2, align.second));
  r.features = concat_cols(
      {abs(sub(r.intra_first, r.intra_second)), mul(r.intra_first, r.intra_second), r.inter_first, r.inter_second});
  return r;
}

Tensor StsHead::output_distribution(const Tensor& features) const {
  return softmax(output_(relu(hidden_(features))), 1);
}

Tensor StsHead::forward(const Tensor& h1, const Tensor& h2) const {
  return output_distribution(represent(h1, h2).features);
}

}  // namespace xlsts

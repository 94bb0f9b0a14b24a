// SPDX-License-Identifier: Apache-2.0
#include "xlsts/translator.hpp"

#include <algorithm>
#include <cmath>

#include "xlsts/errors.hpp"
#include "xlsts/ops.hpp"
#include "xlsts/vocab.hpp"

namespace xlsts {

void TransformerConfig::validate() const {
  if (d_model == 0 || d_embed == 0 || d_ff == 0 || heads == 0 || encoder_layers == 0 || decoder_layers == 0 ||
      max_len == 0) {
    throw ConfigError("transformer dimensions must be positive");
  }
  if (d_model % heads != 0) {
    throw ConfigError("d_model " + std::to_string(d_model) + " is not divisible by heads " + std::to_string(heads));
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
}

PackedBatch PackedBatch::pack(std::span<const std::vector<int>> sequences) {
  PackedBatch b;
  for (const auto& s : sequences) {
    if (s.empty()) throw InputError("cannot pack an empty sequence");
    b.ids.insert(b.ids.end(), s.begin(), s.end());
    b.lengths.push_back(s.size());
  }
  return b;
}

std::vector<std::size_t> PackedBatch::offsets() const {
  std::vector<std::size_t> out(lengths.size());
  std::size_t at = 0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    out[i] = at;
    at += lengths[i];
  }
  return out;
}

Tensor positional_encoding(std::span<const std::size_t> lengths, std::size_t width) {
  std::size_t total = 0;
  for (auto l : lengths) total += l;
  std::vector<double> v(total * width);
  std::size_t row = 0;
  for (auto l : lengths) {
    for (std::size_t pos = 0; pos < l; ++pos, ++row) {
      for (std::size_t c = 0; c < width; ++c) {
        const double freq = std::pow(10000.0, -static_cast<double>(c - c % 2) / static_cast<double>(width));
        const double angle = static_cast<double>(pos) * freq;
        v[row * width + c] = c % 2 == 0 ? std::sin(angle) : std::cos(angle);
      }
    }
  }
  return Tensor({total, width}, std::move(v));
}

Translator::Translator(TransformerConfig config, std::vector<std::string> languages, std::size_t encoder_vocab_size,
                       std::vector<std::size_t> decoder_vocab_sizes, std::uint64_t seed)
    : config_(config),
      languages_(std::move(languages)),
      encoder_vocab_size_(encoder_vocab_size),
      decoder_vocab_sizes_(std::move(decoder_vocab_sizes)),
      dropout_rng_(seed ^ 0x9e3779b97f4a7c15ULL) {
  config_.validate();
  if (languages_.empty()) throw ConfigError("at least one language is required");
  if (decoder_vocab_sizes_.size() != languages_.size()) throw ConfigError("one decoder vocabulary size per language");
  if (encoder_vocab_size_ == 0) throw ConfigError("empty encoder vocabulary");

  Rng rng(seed);
  const std::size_t d = config_.d_model, e = config_.d_embed;
  const double embed_std = 1.0 / std::sqrt(static_cast<double>(e));
  encoder_embedding_ = params_.normal("encoder.embedding", {encoder_vocab_size_, e}, embed_std, rng);
  if (e != d) encoder_embed_projection_ = Linear::create(params_, "encoder.embed_projection", e, d, rng);
  for (std::size_t i = 0; i < config_.encoder_layers; ++i) {
    const std::string p = "encoder.layer" + std::to_string(i) + ".";
    EncoderLayer layer;
    layer.self_attention = make_attention(p + "self_attention", rng);
    layer.norm1 = LayerNorm::create(params_, p + "norm1", d);
    layer.ff1 = Linear::create(params_, p + "ff1", d, config_.d_ff, rng);
    layer.ff2 = Linear::create(params_, p + "ff2", config_.d_ff, d, rng);
    layer.norm2 = LayerNorm::create(params_, p + "norm2", d);
    encoder_layers_.push_back(std::move(layer));
  }
  if (e != d) decoder_embed_projection_ = Linear::create(params_, "decoder.embed_projection", e, d, rng);
  for (std::size_t i = 0; i < config_.decoder_layers; ++i) {
    const std::string p = "decoder.layer" + std::to_string(i) + ".";
    DecoderLayer layer;
    layer.self_attention = make_attention(p + "self_attention", rng);
    layer.norm1 = LayerNorm::create(params_, p + "norm1", d);
    layer.cross_attention = make_attention(p + "cross_attention", rng);
    layer.norm2 = LayerNorm::create(params_, p + "norm2", d);
    layer.ff1 = Linear::create(params_, p + "ff1", d, config_.d_ff, rng);
    layer.ff2 = Linear::create(params_, p + "ff2", config_.d_ff, d, rng);
    layer.norm3 = LayerNorm::create(params_, p + "norm3", d);
    decoder_layers_.push_back(std::move(layer));
  }
  for (std::size_t l = 0; l < languages_.size(); ++l) {
    if (decoder_vocab_sizes_[l] == 0) throw ConfigError("empty decoder vocabulary for " + languages_[l]);
    const std::string p = "decoder." + languages_[l] + ".";
    OutputSide side;
    side.embedding = params_.normal(p + "embedding", {decoder_vocab_sizes_[l], e}, embed_std, rng);
    side.projection = Linear::create(params_, p + "output", d, decoder_vocab_sizes_[l], rng);
    outputs_.push_back(std::move(side));
  }
}

std::size_t Translator::decoder_vocab_size(int language) const {
  if (language < 0 || static_cast<std::size_t>(language) >= languages_.size()) {
    throw ConfigError("unknown language index " + std::to_string(language));
  }
  return decoder_vocab_sizes_[static_cast<std::size_t>(language)];
}

std::vector<NamedTensor> Translator::encoder_layer_parameters(std::size_t layer) const {
  if (layer >= config_.encoder_layers) throw ContractError("encoder layer " + std::to_string(layer) + " out of range");
  return params_.with_prefix("encoder.layer" + std::to_string(layer) + ".");
}

Translator::AttentionBlock Translator::make_attention(const std::string& name, Rng& rng) {
  const std::size_t d = config_.d_model;
  AttentionBlock b;
  b.q = Linear::create(params_, name + ".q", d, d, rng);
  b.k = Linear::create(params_, name + ".k", d, d, rng);
  b.v = Linear::create(params_, name + ".v", d, d, rng);
  b.out = Linear::create(params_, name + ".out", d, d, rng);
  return b;
}

Tensor Translator::drop(const Tensor& x) const {
  if (!training_ || config_.dropout == 0.0) return x;
  return dropout(x, config_.dropout, dropout_rng_);
}

Tensor Translator::attend(const AttentionBlock& block, const Tensor& x, const Tensor& memory,
                          std::span<const std::size_t> q_lengths, std::span<const std::size_t> kv_lengths,
                          bool causal) const {
  auto ctx = attention(block.q(x), block.k(memory), block.v(memory), config_.heads, q_lengths, kv_lengths, causal);
  return block.out(ctx);
}

Tensor Translator::feed_forward(const Linear& ff1, const Linear& ff2, const Tensor& x) const {
  return ff2(drop(relu(ff1(x))));
}

Tensor Translator::embed_rows(const Tensor& table, std::span<const int> ids, std::span<const std::size_t> lengths,
                              std::size_t vocab_size, const char* side) const {
  for (auto l : lengths) {
    if (l > config_.max_len) {
      throw InputError(std::string(side) + " sequence of length " + std::to_string(l) + " exceeds max_len " +
                       std::to_string(config_.max_len));
    }
  }
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size) {
      throw InputError(std::string(side) + " id " + std::to_string(id) + " outside vocabulary of size " +
                       std::to_string(vocab_size));
    }
  }
  auto x = scale(gather_rows(table, ids), std::sqrt(static_cast<double>(config_.d_embed)));
  return drop(add(x, positional_encoding(lengths, config_.d_embed)));
}

Tensor Translator::embed(const PackedBatch& batch) const {
  auto x = embed_rows(encoder_embedding_, batch.ids, batch.lengths, encoder_vocab_size_, "encoder");
  return encoder_embed_projection_.weight.defined() ? encoder_embed_projection_(x) : x;
}

Tensor Translator::run_encoder_layers(Tensor x, std::span<const std::size_t> lengths, std::size_t begin,
                                      std::size_t end) const {
  if (begin > end || end > encoder_layers_.size()) throw ContractError("encoder layer range out of bounds");
  for (std::size_t i = begin; i < end; ++i) {
    const auto& layer = encoder_layers_[i];
    x = layer.norm1(add(x, drop(attend(layer.self_attention, x, x, lengths, lengths, false))));
    x = layer.norm2(add(x, drop(feed_forward(layer.ff1, layer.ff2, x))));
  }
  return x;
}

Tensor Translator::encode(const PackedBatch& batch) const {
  return run_encoder_layers(embed(batch), batch.lengths, 0, encoder_layers_.size());
}

Tensor Translator::encode(std::span<const int> ids) const {
  PackedBatch b;
  b.ids.assign(ids.begin(), ids.end());
  b.lengths = {ids.size()};
  if (ids.empty()) throw InputError("cannot encode an empty sequence");
  return encode(b);
}

Tensor Translator::decode_teacher_forced(const Tensor& memory, std::span<const std::size_t> memory_lengths,
                                         const PackedBatch& prefixes, int language) const {
  const std::size_t vocab = decoder_vocab_size(language);
  const auto& side = outputs_[static_cast<std::size_t>(language)];
  auto x = embed_rows(side.embedding, prefixes.ids, prefixes.lengths, vocab, "decoder");
  if (decoder_embed_projection_.weight.defined()) x = decoder_embed_projection_(x);
  for (const auto& layer : decoder_layers_) {
    x = layer.norm1(add(x, drop(attend(layer.self_attention, x, x, prefixes.lengths, prefixes.lengths, true))));
    x = layer.norm2(
        add(x, drop(attend(layer.cross_attention, x, memory, prefixes.lengths, memory_lengths, false))));
    x = layer.norm3(add(x, drop(feed_forward(layer.ff1, layer.ff2, x))));
  }
  return side.projection(x);
}

std::vector<std::vector<int>> Translator::greedy_decode(const PackedBatch& sources, int language,
                                                        std::size_t max_steps) const {
  NoGradGuard no_grad;
  const std::size_t n = sources.size();
  const std::size_t vocab = decoder_vocab_size(language);
  max_steps = std::min(max_steps, config_.max_len - 1);
  auto memory = encode(sources);
  std::vector<std::vector<int>> prefixes(n, std::vector<int>{Vocabulary::kBos});
  std::vector<bool> done(n, false);
  for (std::size_t step = 0; step < max_steps; ++step) {
    auto logits = decode_teacher_forced(memory, sources.lengths, PackedBatch::pack(prefixes), language);
    const auto values = logits.values();
    bool all_done = true;
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t row = s * (step + 1) + step;
      int best = Vocabulary::kEos;
      if (!done[s]) {
        const double* r = values.data() + row * vocab;
        best = static_cast<int>(std::max_element(r, r + vocab) - r);
        if (best == Vocabulary::kEos) done[s] = true;
      }
      prefixes[s].push_back(best);
      all_done = all_done && done[s];
    }
    if (all_done) break;
  }
  std::vector<std::vector<int>> out(n);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t i = 1; i < prefixes[s].size() && prefixes[s][i] != Vocabulary::kEos; ++i) {
      out[s].push_back(prefixes[s][i]);
    }
  }
  return out;
}

}  // namespace xlsts

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xlsts/parameters.hpp"
#include "xlsts/rng.hpp"

namespace xlsts {

struct TransformerConfig {
  std::size_t d_model = 64;
  std::size_t d_embed = 64;
  std::size_t d_ff = 256;
  std::size_t heads = 4;
  std::size_t encoder_layers = 2;
  std::size_t decoder_layers = 2;
  std::size_t max_len = 64;
  double dropout = 0.0;

  // Throws ConfigError on a zero dimension, d_model % heads != 0, or dropout outside [0, 1).
  void validate() const;
};

// Variable-length id sequences laid out back to back.
struct PackedBatch {
  std::vector<int> ids;
  std::vector<std::size_t> lengths;

  static PackedBatch pack(std::span<const std::vector<int>> sequences);
  std::size_t size() const { return lengths.size(); }
  std::vector<std::size_t> offsets() const;
};

// Sinusoidal position table rows for positions 0..length-1 of every segment.
Tensor positional_encoding(std::span<const std::size_t> lengths, std::size_t width);

// Post-LN transformer with one encoder shared by every language and direction,
// shared decoder blocks, and per-language decoder embeddings and output layers.
class Translator {
 public:
  Translator(TransformerConfig config, std::vector<std::string> languages, std::size_t encoder_vocab_size,
             std::vector<std::size_t> decoder_vocab_sizes, std::uint64_t seed);

  const TransformerConfig& config() const { return config_; }
  const std::vector<std::string>& languages() const { return languages_; }
  std::size_t num_languages() const { return languages_.size(); }
  std::size_t encoder_vocab_size() const { return encoder_vocab_size_; }
  std::size_t decoder_vocab_size(int language) const;

  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }
  // "encoder." parameters; layer i owns the "encoder.layer<i>." prefix.
  std::vector<NamedTensor> encoder_parameters() const { return params_.with_prefix("encoder."); }
  std::vector<NamedTensor> encoder_layer_parameters(std::size_t layer) const;

  // Dropout is active only in training mode.
  void set_training(bool training) { training_ = training; }
  bool training() const { return training_; }

  // Scaled token embeddings plus positions. Throws InputError for an id outside
  // the encoder vocabulary or a sequence longer than max_len.
  Tensor embed(const PackedBatch& batch) const;
  // Encoder layers [begin, end) over packed rows.
  Tensor run_encoder_layers(Tensor x, std::span<const std::size_t> lengths, std::size_t begin, std::size_t end) const;
  // [total_len x d_model]: one hidden state per input position.
  Tensor encode(const PackedBatch& batch) const;
  Tensor encode(std::span<const int> ids) const;

  // Logits [total_prefix_len x |vocab(language)|]; position i sees prefix ids <= i
  // and all of its own source's memory. Throws ConfigError for an unknown language.
  Tensor decode_teacher_forced(const Tensor& memory, std::span<const std::size_t> memory_lengths,
                               const PackedBatch& prefixes, int language) const;

  // Argmax decoding from BOS until EOS or max_steps; outputs exclude BOS/EOS.
  std::vector<std::vector<int>> greedy_decode(const PackedBatch& sources, int language, std::size_t max_steps) const;

 private:
  struct AttentionBlock {
    Linear q, k, v, out;
  };
  struct EncoderLayer {
    AttentionBlock self_attention;
    LayerNorm norm1;
    Linear ff1, ff2;
    LayerNorm norm2;
  };
  struct DecoderLayer {
    AttentionBlock self_attention;
    LayerNorm norm1;
    AttentionBlock cross_attention;
    LayerNorm norm2;
    Linear ff1, ff2;
    LayerNorm norm3;
  };
  struct OutputSide {
    Tensor embedding;
    Linear projection;
  };

  AttentionBlock make_attention(const std::string& name, Rng& rng);
  Tensor attend(const AttentionBlock& block, const Tensor& x, const Tensor& memory,
                std::span<const std::size_t> q_lengths, std::span<const std::size_t> kv_lengths, bool causal) const;
  Tensor feed_forward(const Linear& ff1, const Linear& ff2, const Tensor& x) const;
  Tensor drop(const Tensor& x) const;
  Tensor embed_rows(const Tensor& table, std::span<const int> ids, std::span<const std::size_t> lengths,
                    std::size_t vocab_size, const char* side) const;

  TransformerConfig config_;
  std::vector<std::string> languages_;
  std::size_t encoder_vocab_size_;
  std::vector<std::size_t> decoder_vocab_sizes_;
  ParameterSet params_;
  Tensor encoder_embedding_;
  Linear encoder_embed_projection_;
  Linear decoder_embed_projection_;
  std::vector<EncoderLayer> encoder_layers_;
  std::vector<DecoderLayer> decoder_layers_;
  std::vector<OutputSide> outputs_;
  bool training_ = false;
  mutable Rng dropout_rng_;
};

}  // namespace xlsts

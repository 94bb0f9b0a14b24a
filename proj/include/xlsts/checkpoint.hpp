// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "xlsts/adam.hpp"
#include "xlsts/config.hpp"
#include "xlsts/tokenizer.hpp"

namespace xlsts {

enum class Stage { kMt, kSts };

std::string_view stage_name(Stage stage);
// Throws DataError for anything but "mt" or "sts".
Stage parse_stage(std::string_view name);

inline constexpr int kCheckpointFormat = 1;

struct ParameterRecord {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

// params.bin: "XLSTSPRM", u32 format, u64 count, then per record u32 name length,
// name bytes, u32 rank, u64 dims, fp32 values; all little-endian.
std::string encode_parameters(std::span<const NamedTensor> params);
std::vector<ParameterRecord> decode_parameters(std::string_view bytes);

struct Checkpoint {
  Stage stage = Stage::kMt;
  RunConfig config;
  TokenizerSet tokenizers;
  std::vector<ParameterRecord> parameters;
  nlohmann::json extra = nlohmann::json::object();

  // Throws DataError when absent.
  const ParameterRecord& find(std::string_view name) const;
  bool contains(std::string_view name) const;
};

// Writes manifest.json, params.bin and tokenizer/ under dir.
void save_checkpoint(const std::filesystem::path& dir, Stage stage, const RunConfig& config,
                     const TokenizerSet& tokenizers, std::span<const NamedTensor> params,
                     const nlohmann::json& extra = nlohmann::json::object());

// Throws DataError on a missing or malformed file, a format version mismatch, or
// tokenizer files whose fingerprints differ from the manifest.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

// Throws ConfigError when the checkpoint is not at `expected` stage.
void require_stage(const Checkpoint& checkpoint, Stage expected);

// Copies stored values into `targets` by name. Names missing from the
// checkpoint or stored with another shape throw DataError.
void assign_parameters(std::span<const NamedTensor> targets, const Checkpoint& checkpoint);

}  // namespace xlsts

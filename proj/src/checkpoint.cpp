// SPDX-License-Identifier: Apache-2.0
#include "xlsts/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "xlsts/data.hpp"
#include "xlsts/errors.hpp"

namespace xlsts {

using nlohmann::json;

namespace {

constexpr std::string_view kMagic = "XLSTSPRM";

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + at_, sizeof(T));
    at_ += sizeof(T);
    return value;
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(at_, n);
    at_ += n;
    return s;
  }

  bool done() const { return at_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - at_ < n) throw DataError("params.bin is truncated");
  }

  std::string_view bytes_;
  std::size_t at_ = 0;
};

}  // namespace

std::string_view stage_name(Stage stage) { return stage == Stage::kMt ? "mt" : "sts"; }

Stage parse_stage(std::string_view name) {
  if (name == "mt") return Stage::kMt;
  if (name == "sts") return Stage::kSts;
  throw DataError("unknown checkpoint stage '" + std::string(name) + "'");
}

std::string encode_parameters(std::span<const NamedTensor> params) {
  std::string out(kMagic);
  put<std::uint32_t>(out, kCheckpointFormat);
  put<std::uint64_t>(out, params.size());
  for (const auto& p : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out += p.name;
    const auto& shape = p.tensor.shape();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(shape.size()));
    for (auto d : shape) put<std::uint64_t>(out, d);
    for (double v : p.tensor.values()) put<float>(out, static_cast<float>(v));
  }
  return out;
}

std::vector<ParameterRecord> decode_parameters(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(kMagic.size()) != kMagic) throw DataError("params.bin has a bad header");
  if (r.get<std::uint32_t>() != kCheckpointFormat) throw DataError("params.bin has an unsupported format version");
  const auto count = r.get<std::uint64_t>();
  std::vector<ParameterRecord> out;
  for (std::uint64_t i = 0; i < count; ++i) {
    ParameterRecord rec;
    rec.name = std::string(r.take(r.get<std::uint32_t>()));
    const auto rank = r.get<std::uint32_t>();
    for (std::uint32_t k = 0; k < rank; ++k) rec.shape.push_back(r.get<std::uint64_t>());
    const auto n = shape_numel(rec.shape);
    rec.values.resize(n);
    for (auto& v : rec.values) v = r.get<float>();
    out.push_back(std::move(rec));
  }
  if (!r.done()) throw DataError("params.bin has trailing bytes");
  return out;
}

const ParameterRecord& Checkpoint::find(std::string_view name) const {
  for (const auto& p : parameters) {
    if (p.name == name) return p;
  }
  throw DataError("checkpoint has no parameter '" + std::string(name) + "'");
}

bool Checkpoint::contains(std::string_view name) const {
  for (const auto& p : parameters) {
    if (p.name == name) return true;
  }
  return false;
}

void save_checkpoint(const std::filesystem::path& dir, Stage stage, const RunConfig& config,
                     const TokenizerSet& tokenizers, std::span<const NamedTensor> params, const json& extra) {
  std::filesystem::create_directories(dir);
  tokenizers.save(dir / "tokenizer");
  json shapes = json::array();
  for (const auto& p : params) shapes.push_back({{"name", p.name}, {"shape", p.tensor.shape()}});
  json manifest{{"format_version", kCheckpointFormat},
                {"stage", std::string(stage_name(stage))},
                {"config", config_to_json(config)},
                {"vocab_fingerprints", tokenizers.fingerprints()},
                {"parameters", shapes},
                {"extra", extra}};
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
  write_text_file(dir / "params.bin", encode_parameters(params));
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("checkpoint directory " + dir.string() + " not found");
  json manifest;
  try {
    manifest = json::parse(read_text_file(dir / "manifest.json"));
  } catch (const json::parse_error& e) {
    throw DataError(std::string("manifest.json is not valid JSON: ") + e.what());
  }
  Checkpoint c;
  try {
    if (manifest.at("format_version").get<int>() != kCheckpointFormat) {
      throw DataError("unsupported checkpoint format version");
    }
    c.stage = parse_stage(manifest.at("stage").get<std::string>());
    c.config = config_from_json(manifest.at("config"));
    c.tokenizers = TokenizerSet::load(dir / "tokenizer", c.config.languages);
    const auto expected = manifest.at("vocab_fingerprints").get<std::map<std::string, std::string>>();
    if (expected != c.tokenizers.fingerprints()) {
      throw DataError("vocabulary fingerprint mismatch in checkpoint " + dir.string());
    }
    if (manifest.contains("extra")) c.extra = manifest.at("extra");
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed manifest.json: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("manifest.json holds an invalid config: ") + e.what());
  }
  c.parameters = decode_parameters(read_text_file(dir / "params.bin"));
  return c;
}

void require_stage(const Checkpoint& checkpoint, Stage expected) {
  if (checkpoint.stage != expected) {
    throw ConfigError("expected a " + std::string(stage_name(expected)) + "-stage checkpoint, got " +
                      std::string(stage_name(checkpoint.stage)));
  }
}

void assign_parameters(std::span<const NamedTensor> targets, const Checkpoint& checkpoint) {
  for (const auto& t : targets) {
    const auto& rec = checkpoint.find(t.name);
    if (rec.shape != t.tensor.shape()) {
      throw DataError("parameter '" + t.name + "' stored as " + shape_string(rec.shape) + ", model expects " +
                      shape_string(t.tensor.shape()));
    }
    auto dst = Tensor(t.tensor).mutable_values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<double>(rec.values[i]);
  }
}

}  // namespace xlsts

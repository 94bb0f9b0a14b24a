// SPDX-License-Identifier: Apache-2.0
#include "xlsts/config.hpp"

#include <algorithm>
#include <set>

#include "xlsts/data.hpp"
#include "xlsts/errors.hpp"

namespace xlsts {

using nlohmann::json;

namespace {

// Reads known keys of one JSON object and rejects the rest.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + " has the wrong type");
    }
  }

  void read_size(const char* key, std::size_t& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
      throw ConfigError(where(key) + " must be a nonnegative integer");
    }
    out = it->get<std::size_t>();
  }

  void read_number(const char* key, double& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    if (!it->is_number()) throw ConfigError(where(key) + " must be a number");
    out = it->get<double>();
  }

  const json* object(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown config key " + where(key.c_str()));
    }
  }

  std::string where(const char* key = nullptr) const {
    std::string w = path_;
    if (key) w += std::string(path_.empty() ? "" : ".") + key;
    if (w.empty()) w = "config";
    return "'" + w + "'";
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_tokenizer(const json& j, TokenizerSettings& t) {
  ObjectReader r(j, "tokenizer");
  r.read_size("encoder_merges", t.encoder_merges);
  r.read_size("decoder_merges", t.decoder_merges);
  r.read_size("encoder_vocab", t.encoder_vocab);
  r.read_size("decoder_vocab", t.decoder_vocab);
  r.finish();
}

void read_transformer(const json& j, TransformerConfig& t) {
  ObjectReader r(j, "transformer");
  r.read_size("d_model", t.d_model);
  r.read_size("d_embed", t.d_embed);
  r.read_size("d_ff", t.d_ff);
  r.read_size("heads", t.heads);
  r.read_size("encoder_layers", t.encoder_layers);
  r.read_size("decoder_layers", t.decoder_layers);
  r.read_size("max_len", t.max_len);
  r.read_number("dropout", t.dropout);
  r.finish();
}

void read_mt(const json& j, RunConfig& c) {
  ObjectReader r(j, "mt");
  r.read("lambda", c.mt_lambda);
  r.read_size("steps", c.mt.steps);
  r.read_size("batch_tokens", c.mt.batch_tokens);
  r.read_number("learning_rate", c.mt.learning_rate);
  r.read_number("label_smoothing", c.mt.label_smoothing);
  r.read_size("log_every", c.mt.log_every);
  r.read_number("heldout_fraction", c.mt_heldout_fraction);
  r.finish();
}

void read_noise(const json& j, NoiseConfig& n) {
  ObjectReader r(j, "noise");
  r.read_number("drop_prob", n.drop_prob);
  r.read_size("swap_window", n.swap_window);
  r.finish();
}

void read_sts(const json& j, StsTrainingSettings& s) {
  ObjectReader r(j, "sts");
  r.read_size("max_level", s.head.max_level);
  r.read_size("hidden", s.head.hidden);
  r.read_size("attention_width", s.head.attention_width);
  r.read_size("match_width", s.head.match_width);
  r.read_size("compare_width", s.head.compare_width);
  std::string aggregator(aggregator_name(s.head.aggregator));
  r.read("aggregator", aggregator);
  s.head.aggregator = parse_aggregator(aggregator);
  r.read("language", s.language);
  r.read_size("unfreeze_last_n", s.unfreeze_last_n);
  r.read("ensemble", s.ensemble);
  r.read("ensemble_languages", s.ensemble_languages);
  std::string mode = s.beta_mode == BetaMode::kFixed ? "fixed" : "learnable";
  r.read("beta_mode", mode);
  if (mode == "fixed") {
    s.beta_mode = BetaMode::kFixed;
  } else if (mode == "learnable") {
    s.beta_mode = BetaMode::kLearnable;
  } else {
    throw ConfigError("'sts.beta_mode' must be fixed or learnable");
  }
  r.read("beta", s.beta);
  r.read_size("steps", s.steps);
  r.read_size("batch_size", s.batch_size);
  r.read_number("learning_rate", s.learning_rate);
  r.read_size("eval_every", s.eval_every);
  r.read_number("dev_fraction", s.dev_fraction);
  r.read("metric", s.metric);
  r.finish();
}

void read_paths(const json& j, DataPaths& p) {
  ObjectReader r(j, "paths");
  r.read("parallel", p.parallel);
  r.read("parallel_heldout", p.parallel_heldout);
  r.read("sts_train", p.sts_train);
  r.read("sts_dev", p.sts_dev);
  r.read("sts_test", p.sts_test);
  r.read("vectors", p.vectors);
  r.finish();
}

void read_ablation(const json& j, AblationSettings& a) {
  ObjectReader r(j, "ablation");
  r.read("rich_language", a.rich_language);
  r.read("low_language", a.low_language);
  r.read("rich_train", a.rich_train);
  r.read("low_train", a.low_train);
  r.read("low_dev", a.low_dev);
  r.read("low_test", a.low_test);
  r.read_size("sts_steps", a.sts_steps);
  r.finish();
}

bool has_language(const std::vector<std::string>& languages, const std::string& l) {
  return std::find(languages.begin(), languages.end(), l) != languages.end();
}

}  // namespace

void RunConfig::validate() const {
  if (languages.empty()) throw ConfigError("at least one language is required");
  std::set<std::string> unique(languages.begin(), languages.end());
  if (unique.size() != languages.size()) throw ConfigError("duplicate language in 'languages'");
  for (const auto& l : languages) {
    if (l.empty() || l.find_first_of(" \t\n<>/") != std::string::npos) {
      throw ConfigError("invalid language code '" + l + "'");
    }
  }
  transformer.validate();
  noise.validate();
  sts.head.validate();
  const auto directions = translation_directions(languages.size()).size();
  if (!mt_lambda.empty() && mt_lambda.size() != directions) {
    throw ConfigError("'mt.lambda' needs " + std::to_string(directions) + " entries");
  }
  loss_weights();
  if (mt.batch_tokens == 0) throw ConfigError("'mt.batch_tokens' must be positive");
  if (!(mt.learning_rate > 0.0)) throw ConfigError("'mt.learning_rate' must be positive");
  if (!(mt.label_smoothing >= 0.0 && mt.label_smoothing < 1.0)) {
    throw ConfigError("'mt.label_smoothing' must lie in [0, 1)");
  }
  if (!(mt_heldout_fraction >= 0.0 && mt_heldout_fraction < 1.0)) {
    throw ConfigError("'mt.heldout_fraction' must lie in [0, 1)");
  }
  if (!sts.language.empty() && !has_language(languages, sts.language)) {
    throw ConfigError("'sts.language' " + sts.language + " is not a configured language");
  }
  for (const auto& l : sts.ensemble_languages) {
    if (!has_language(languages, l)) throw ConfigError("ensemble language " + l + " is not configured");
  }
  if (sts.unfreeze_last_n > transformer.encoder_layers) {
    throw ConfigError("'sts.unfreeze_last_n' exceeds the encoder depth");
  }
  if (sts.beta_mode == BetaMode::kFixed && sts.ensemble) {
    if (sts.beta.size() != view_languages().size()) {
      throw ConfigError("'sts.beta' needs one weight per ensemble language");
    }
  }
  if (sts.batch_size == 0) throw ConfigError("'sts.batch_size' must be positive");
  if (sts.eval_every == 0) throw ConfigError("'sts.eval_every' must be positive");
  if (!(sts.learning_rate > 0.0)) throw ConfigError("'sts.learning_rate' must be positive");
  if (!(sts.dev_fraction >= 0.0 && sts.dev_fraction < 1.0)) throw ConfigError("'sts.dev_fraction' must lie in [0, 1)");
  const auto metric = sts_metric();
  if (metric != "pearson" && metric != "auc") throw ConfigError("'sts.metric' must be pearson or auc");
  if (metric == "auc" && sts.head.max_level != 1) throw ConfigError("auc needs a binary task (max_level 1)");
}

MtLossWeights RunConfig::loss_weights() const {
  const auto directions = translation_directions(languages.size()).size();
  return mt_lambda.empty() ? MtLossWeights::uniform(directions) : MtLossWeights(mt_lambda);
}

std::string RunConfig::sts_language() const { return sts.language.empty() ? languages.front() : sts.language; }

std::vector<std::string> RunConfig::view_languages() const {
  if (!sts.ensemble) return {sts_language()};
  return sts.ensemble_languages.empty() ? languages : sts.ensemble_languages;
}

std::string RunConfig::sts_metric() const {
  if (!sts.metric.empty()) return sts.metric;
  return sts.head.max_level == 1 ? "auc" : "pearson";
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  ObjectReader r(j, "");
  r.read("languages", c.languages);
  std::int64_t seed = static_cast<std::int64_t>(c.seed);
  r.read("seed", seed);
  if (seed < 0) throw ConfigError("'seed' must be nonnegative");
  c.seed = static_cast<std::uint64_t>(seed);
  if (auto* t = r.object("tokenizer")) read_tokenizer(*t, c.tokenizer);
  if (auto* t = r.object("transformer")) read_transformer(*t, c.transformer);
  if (auto* m = r.object("mt")) read_mt(*m, c);
  if (auto* n = r.object("noise")) read_noise(*n, c.noise);
  if (auto* s = r.object("sts")) read_sts(*s, c.sts);
  if (auto* p = r.object("paths")) read_paths(*p, c.paths);
  if (auto* a = r.object("ablation")) read_ablation(*a, c.ablation);
  r.finish();
  c.validate();
  return c;
}

json config_to_json(const RunConfig& c) {
  const auto& t = c.transformer;
  const auto& s = c.sts;
  return json{
      {"languages", c.languages},
      {"seed", c.seed},
      {"tokenizer",
       {{"encoder_merges", c.tokenizer.encoder_merges},
        {"decoder_merges", c.tokenizer.decoder_merges},
        {"encoder_vocab", c.tokenizer.encoder_vocab},
        {"decoder_vocab", c.tokenizer.decoder_vocab}}},
      {"transformer",
       {{"d_model", t.d_model},
        {"d_embed", t.d_embed},
        {"d_ff", t.d_ff},
        {"heads", t.heads},
        {"encoder_layers", t.encoder_layers},
        {"decoder_layers", t.decoder_layers},
        {"max_len", t.max_len},
        {"dropout", t.dropout}}},
      {"mt",
       {{"lambda", c.loss_weights().values()},
        {"steps", c.mt.steps},
        {"batch_tokens", c.mt.batch_tokens},
        {"learning_rate", c.mt.learning_rate},
        {"label_smoothing", c.mt.label_smoothing},
        {"log_every", c.mt.log_every},
        {"heldout_fraction", c.mt_heldout_fraction}}},
      {"noise", {{"drop_prob", c.noise.drop_prob}, {"swap_window", c.noise.swap_window}}},
      {"sts",
       {{"max_level", s.head.max_level},
        {"hidden", s.head.hidden},
        {"attention_width", s.head.attention_width},
        {"match_width", s.head.match_width},
        {"compare_width", s.head.compare_width},
        {"aggregator", std::string(aggregator_name(s.head.aggregator))},
        {"language", c.sts_language()},
        {"unfreeze_last_n", s.unfreeze_last_n},
        {"ensemble", s.ensemble},
        {"ensemble_languages", s.ensemble_languages},
        {"beta_mode", s.beta_mode == BetaMode::kFixed ? "fixed" : "learnable"},
        {"beta", s.beta},
        {"steps", s.steps},
        {"batch_size", s.batch_size},
        {"learning_rate", s.learning_rate},
        {"eval_every", s.eval_every},
        {"dev_fraction", s.dev_fraction},
        {"metric", c.sts_metric()}}},
      {"paths",
       {{"parallel", c.paths.parallel},
        {"parallel_heldout", c.paths.parallel_heldout},
        {"sts_train", c.paths.sts_train},
        {"sts_dev", c.paths.sts_dev},
        {"sts_test", c.paths.sts_test},
        {"vectors", c.paths.vectors}}},
      {"ablation",
       {{"rich_language", c.ablation.rich_language},
        {"low_language", c.ablation.low_language},
        {"rich_train", c.ablation.rich_train},
        {"low_train", c.ablation.low_train},
        {"low_dev", c.ablation.low_dev},
        {"low_test", c.ablation.low_test},
        {"sts_steps", c.ablation.sts_steps}}},
  };
}

RunConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const DataError&) {
    throw ConfigError("cannot read config " + path.string());
  }
  return parse_config(text);
}

}  // namespace xlsts

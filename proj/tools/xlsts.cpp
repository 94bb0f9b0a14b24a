// SPDX-License-Identifier: Apache-2.0
// Command-line entry point: bpe-train, pretrain, sts-train, eval, score, baseline, ablation.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

#include "xlsts/baselines.hpp"
#include "xlsts/bleu.hpp"
#include "xlsts/errors.hpp"
#include "xlsts/metrics.hpp"
#include "xlsts/pipeline.hpp"

namespace {

using namespace xlsts;
using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string lang;
  std::string ensemble;
  std::string checkpoint;
  std::string input;
  std::string method = "onehot";
  bool distribution = false;
};

// Relative data paths are taken relative to the config file.
void resolve_paths(RunConfig& c, const fs::path& base) {
  auto fix = [&](std::string& p) {
    if (!p.empty() && fs::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  for (auto* p : {&c.paths.parallel, &c.paths.parallel_heldout, &c.paths.sts_train, &c.paths.sts_dev,
                  &c.paths.sts_test, &c.paths.vectors, &c.ablation.rich_train, &c.ablation.low_train,
                  &c.ablation.low_dev, &c.ablation.low_test}) {
    fix(*p);
  }
}

void apply_overrides(RunConfig& c, const Flags& f) {
  if (f.seed) c.seed = *f.seed;
  if (!f.lang.empty()) c.sts.language = f.lang;
  if (!f.ensemble.empty()) c.sts.ensemble = f.ensemble == "on";
  c.validate();
}

RunConfig load_run_config(const Flags& f) {
  RunConfig c;
  if (!f.config.empty()) {
    c = load_config(f.config);
    resolve_paths(c, fs::absolute(f.config).parent_path());
  }
  apply_overrides(c, f);
  return c;
}

const std::string& require_path(const std::string& path, const char* key) {
  if (path.empty()) throw ConfigError(std::string("'") + key + "' is not set");
  return path;
}

fs::path require_out(const Flags& f) {
  if (f.out.empty()) throw ConfigError("--out is required");
  return f.out;
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

int cmd_bpe_train(const Flags& f) {
  const auto config = load_run_config(f);
  const auto pairs = read_parallel_tsv(require_path(config.paths.parallel, "paths.parallel"));
  const auto tokenizers = train_tokenizers(config, pairs);
  const auto out = require_out(f);
  tokenizers.save(out);
  json sizes{{"encoder", tokenizers.encoder_vocab().size()}};
  for (std::size_t l = 0; l < tokenizers.num_languages(); ++l) {
    sizes["decoder." + tokenizers.languages()[l]] = tokenizers.decoder_vocab(static_cast<int>(l)).size();
  }
  print_json({{"vocab_sizes", sizes}, {"fingerprints", tokenizers.fingerprints()}});
  return 0;
}

int cmd_pretrain(const Flags& f) {
  const auto config = load_run_config(f);
  auto pairs = read_parallel_tsv(require_path(config.paths.parallel, "paths.parallel"));
  std::vector<ParallelPair> heldout;
  if (!config.paths.parallel_heldout.empty()) {
    heldout = read_parallel_tsv(config.paths.parallel_heldout);
  } else {
    std::tie(pairs, heldout) = split_parallel(std::move(pairs), config.mt_heldout_fraction, config.seed);
  }
  const auto out = require_out(f);
  auto result = pretrain_mt(config, pairs, heldout, [](const MtStepLog& log) {
    std::cerr << "step " << log.step << " loss " << log.total << "\n";
  });
  save_checkpoint(out, Stage::kMt, config, result.tokenizers, result.translator.parameters().entries(),
                  result.summary);
  print_json({{"bleu_train", result.summary["bleu_train"]},
              {"bleu_heldout", result.summary.value("bleu_heldout", json::object())},
              {"seed", config.seed},
              {"checkpoint", out.string()}});
  return 0;
}

std::vector<StsExample> read_optional(const std::string& path, Split split) {
  return path.empty() ? std::vector<StsExample>{} : read_sts_tsv(path, split);
}

int cmd_sts_train(const Flags& f) {
  if (f.checkpoint.empty()) throw ConfigError("--checkpoint (an mt-stage checkpoint) is required");
  const auto config = load_run_config(f);
  const auto mt = load_checkpoint(f.checkpoint);
  auto train = read_sts_tsv(require_path(config.paths.sts_train, "paths.sts_train"), Split::kTrain);
  auto dev = read_optional(config.paths.sts_dev, Split::kDev);
  const auto out = require_out(f);
  StsTrainingOptions options;
  options.on_evaluation = [](const StsEvaluation& e, const StsModel&) {
    std::cerr << "step " << e.step << " loss " << e.train_loss << " dev " << e.dev_metric << "\n";
  };
  auto run = run_sts_training(config, mt, std::move(train), std::move(dev), options);
  json summary = run.summary;
  summary["seed"] = run.config.seed;
  const auto test = read_optional(run.config.paths.sts_test, Split::kTest);
  if (!test.empty()) {
    summary["test_metric"] = evaluate_metric(run.config.sts_metric(),
                                             predict_ratings(run.model, test, run.config.sts_language()), test);
  }
  save_checkpoint(out, Stage::kSts, run.config, run.model.tokenizers(), run.model.all_parameters(), summary);
  print_json(summary);
  return 0;
}

int cmd_eval(const Flags& f) {
  if (f.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  const auto ckpt = load_checkpoint(f.checkpoint);
  RunConfig config = ckpt.config;
  if (!f.config.empty()) config = sts_config_from(load_run_config(f), ckpt);
  if (ckpt.stage == Stage::kMt) {
    std::string path = f.input.empty() ? config.paths.parallel_heldout : f.input;
    if (path.empty()) path = require_path(config.paths.parallel, "paths.parallel");
    const auto translator = translator_from_checkpoint(ckpt);
    const auto corpus = build_mt_corpus(ckpt.tokenizers, read_parallel_tsv(path), config.transformer.max_len);
    json bleu = json::object();
    for (const auto& d : translation_directions(config.languages.size())) {
      bleu[direction_name(d, config.languages)] = evaluate_direction_bleu(translator, ckpt.tokenizers, corpus, d);
    }
    print_json({{"stage", "mt"}, {"data", path}, {"bleu", bleu}});
    return 0;
  }
  const auto path = f.input.empty() ? require_path(config.paths.sts_test, "paths.sts_test") : f.input;
  const auto examples = read_sts_tsv(path, Split::kTest);
  const auto model = sts_model_from_checkpoint(ckpt);
  const std::string lang = f.lang.empty() ? ckpt.config.sts_language() : f.lang;
  std::optional<std::string> only;
  if (f.ensemble == "off") only = lang;
  const auto metric = ckpt.config.sts_metric();
  const double value = evaluate_metric(metric, predict_ratings(model, examples, lang, only), examples);
  print_json({{"stage", "sts"}, {"data", path}, {"metric", metric}, {"value", value}, {"examples", examples.size()}});
  return 0;
}

int cmd_score(const Flags& f) {
  if (f.checkpoint.empty()) throw ConfigError("--checkpoint (an sts-stage checkpoint) is required");
  if (f.input.empty()) throw ConfigError("--input is required");
  const auto ckpt = load_checkpoint(f.checkpoint);
  const auto model = sts_model_from_checkpoint(ckpt);
  const auto examples = parse_scoring_tsv(read_text_file(f.input));
  const std::string lang = f.lang.empty() ? ckpt.config.sts_language() : f.lang;
  std::optional<std::string> only;
  if (f.ensemble == "off") only = lang;
  const auto scored = score_examples(model, examples, lang, only);
  double total_ms = 0.0;
  std::string out;
  for (const auto& s : scored) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", s.rating);
    out += buf;
    if (f.distribution) {
      for (double p : s.distribution) {
        std::snprintf(buf, sizeof buf, "\t%.6f", p);
        out += buf;
      }
    }
    out += "\n";
    total_ms += s.latency_ms;
  }
  if (f.out.empty()) {
    std::cout << out;
  } else {
    write_text_file(f.out, out);
  }
  std::cerr << "scored " << scored.size() << " pairs, mean latency "
            << (scored.empty() ? 0.0 : total_ms / static_cast<double>(scored.size())) << " ms/pair\n";
  return 0;
}

int cmd_baseline(const Flags& f) {
  const auto config = load_run_config(f);
  const auto path = f.input.empty() ? require_path(config.paths.sts_test, "paths.sts_test") : f.input;
  const auto examples = read_sts_tsv(path, Split::kTest);
  std::vector<double> scores;
  std::size_t fallbacks = 0;
  if (f.method == "onehot") {
    for (const auto& e : examples) scores.push_back(baseline_onehot(e.sentence1, e.sentence2));
  } else if (f.method == "embed-avg") {
    const auto vectors = WordVectors::load(require_path(config.paths.vectors, "paths.vectors"));
    for (const auto& e : examples) {
      const auto sim = baseline_embed_avg(e.sentence1, e.sentence2, vectors);
      if (sim.fallback) ++fallbacks;
      scores.push_back(sim.cosine);
    }
  } else {
    throw ConfigError("unknown baseline method '" + f.method + "'");
  }
  if (fallbacks > 0) std::cerr << "warning: " << fallbacks << " pairs had a fully out-of-vocabulary sentence\n";
  const auto metric = config.sts_metric();
  print_json({{"method", f.method},
              {"data", path},
              {"metric", metric},
              {"value", evaluate_metric(metric, scores, examples)},
              {"oov_fallbacks", fallbacks}});
  return 0;
}

int cmd_ablation(const Flags& f) {
  const auto config = load_run_config(f);
  const auto& a = config.ablation;
  const auto rich = read_sts_tsv(require_path(a.rich_train, "ablation.rich_train"), Split::kTrain);
  const auto low = read_sts_tsv(require_path(a.low_train, "ablation.low_train"), Split::kTrain);
  const auto dev = read_optional(a.low_dev, Split::kDev);
  const auto test = read_sts_tsv(require_path(a.low_test, "ablation.low_test"), Split::kTest);
  const auto out = require_out(f);

  std::optional<Checkpoint> mt;
  if (!f.checkpoint.empty()) {
    mt = load_checkpoint(f.checkpoint);
  } else {
    auto pairs = read_parallel_tsv(require_path(config.paths.parallel, "paths.parallel"));
    std::cerr << "pretraining the shared encoder\n";
    auto result = pretrain_mt(config, pairs, {});
    save_checkpoint(out / "mt", Stage::kMt, config, result.tokenizers, result.translator.parameters().entries(),
                    result.summary);
    mt = load_checkpoint(out / "mt");
  }
  const auto report = run_ablation(config, *mt, rich, low, dev, test, [](const AblationCell& c) {
    std::cerr << (c.pretrained ? "pretrained    " : "w/o pretrained") << "  " << c.data << "  test "
              << c.test_metric << "\n";
  });
  auto j = report.to_json();
  j["mt_checkpoint"] = f.checkpoint.empty() ? (out / "mt").string() : f.checkpoint;
  write_text_file(out / "ablation.json", j.dump(2) + "\n");
  std::printf("%-16s %-20s %10s %10s\n", "encoder", "data", "dev", "test");
  for (const auto& c : report.cells) {
    std::printf("%-16s %-20s %10.4f %10.4f\n", c.pretrained ? "pretrained" : "w/o pretrained", c.data.c_str(),
                c.dev_metric, c.test_metric);
  }
  return 0;
}

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const InputError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cross-lingual semantic textual similarity"};
  app.require_subcommand(1);
  Flags flags;

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Flags&);
  };
  const Command commands[] = {
      {"bpe-train", "learn subword models and vocabularies from paths.parallel", cmd_bpe_train},
      {"pretrain", "train the shared encoder on the translation directions", cmd_pretrain},
      {"sts-train", "train the similarity head on top of an mt checkpoint", cmd_sts_train},
      {"eval", "BLEU for an mt checkpoint, Pearson/AUC for an sts checkpoint", cmd_eval},
      {"score", "score sentence pairs with an sts checkpoint", cmd_score},
      {"baseline", "bag-of-words baselines on an STS file", cmd_baseline},
      {"ablation", "run the eight-cell ablation grid", cmd_ablation},
  };
  int (*selected)(const Flags&) = nullptr;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", flags.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "override the config seed");
    sub->add_option("--out", flags.out, "output directory (or file for score)");
    sub->add_option("--lang", flags.lang, "language of the labeled data");
    sub->add_option("--ensemble", flags.ensemble, "multilingual ensemble")->check(CLI::IsMember({"on", "off"}));
    sub->add_option("--checkpoint", flags.checkpoint, "checkpoint directory");
    sub->add_option("--input", flags.input, "data file overriding the config path");
    if (std::string(c.name) == "score") sub->add_flag("--distribution", flags.distribution, "print p per level");
    if (std::string(c.name) == "baseline") {
      sub->add_option("--method", flags.method, "onehot or embed-avg")->check(CLI::IsMember({"onehot", "embed-avg"}));
    }
    sub->callback([&selected, run = c.run] { selected = run; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  return run_guarded([&] { return selected(flags); });
}

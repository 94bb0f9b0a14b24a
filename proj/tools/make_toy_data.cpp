// SPDX-License-Identifier: Apache-2.0
// Writes the synthetic English/Spanish corpus, rated pairs and a run config.
#include <CLI11.hpp>

#include <iostream>

#include "xlsts/config.hpp"
#include "xlsts/errors.hpp"
#include "xlsts/toy_data.hpp"

int main(int argc, char** argv) {
  using namespace xlsts;
  CLI::App app{"synthetic toy data"};
  std::string out = "toy";
  std::uint64_t seed = 1;
  std::size_t pairs = 50;
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "generator seed");
  app.add_option("--pairs", pairs, "parallel training pairs")->check(CLI::Range(8, 2000));
  CLI11_PARSE(app, argc, argv);

  try {
    const std::filesystem::path dir(out);
    const auto sentences = toy_sentences(pairs + pairs / 5, seed);
    const std::vector<ToySentence> train(sentences.begin(), sentences.begin() + static_cast<std::ptrdiff_t>(pairs));
    const std::vector<ToySentence> heldout(sentences.begin() + static_cast<std::ptrdiff_t>(pairs), sentences.end());
    auto parallel = [](const std::vector<ToySentence>& pool) {
      std::vector<ParallelPair> p;
      for (const auto& s : pool) p.push_back({render_toy(s, "en"), render_toy(s, "es")});
      return p;
    };
    write_parallel_tsv(dir / "parallel.tsv", parallel(train));
    write_parallel_tsv(dir / "parallel_heldout.tsv", parallel(heldout));
    write_sts_tsv(dir / "sts_en_train.tsv", render_sts(toy_sts_pairs(train, 40, seed + 1), "en"));
    write_sts_tsv(dir / "sts_en_dev.tsv", render_sts(toy_sts_pairs(train, 10, seed + 2), "en"));
    write_sts_tsv(dir / "sts_en_test.tsv", render_sts(toy_sts_pairs(train, 20, seed + 3), "en"));
    write_sts_tsv(dir / "sts_es_train.tsv", render_sts(toy_sts_pairs(train, 12, seed + 4), "es"));
    write_sts_tsv(dir / "sts_es_dev.tsv", render_sts(toy_sts_pairs(train, 20, seed + 5), "es"));
    write_sts_tsv(dir / "sts_es_test.tsv", render_sts(toy_sts_pairs(train, 60, seed + 6), "es"));

    RunConfig c;
    c.seed = seed;
    c.paths.parallel = "parallel.tsv";
    c.paths.parallel_heldout = "parallel_heldout.tsv";
    c.paths.sts_train = "sts_en_train.tsv";
    c.paths.sts_dev = "sts_en_dev.tsv";
    c.paths.sts_test = "sts_en_test.tsv";
    c.ablation.rich_train = "sts_en_train.tsv";
    c.ablation.low_train = "sts_es_train.tsv";
    c.ablation.low_dev = "sts_es_dev.tsv";
    c.ablation.low_test = "sts_es_test.tsv";
    c.sts.steps = 600;
    c.ablation.sts_steps = 300;
    write_text_file(dir / "config.json", config_to_json(c).dump(2) + "\n");
    std::cout << "wrote " << dir.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

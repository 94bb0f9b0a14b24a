// SPDX-License-Identifier: Apache-2.0
// One PASS/FAIL line per acceptance criterion. Exit status 1 when any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "support/gradient_suite.hpp"
#include "support/sts_gradient.hpp"
#include "support/toy_pipeline.hpp"
#include "xlsts/bleu.hpp"
#include "xlsts/metrics.hpp"

using namespace xlsts;
using namespace xlsts::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("criterion %2d %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> tree(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[std::filesystem::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return out;
}

std::vector<double> snapshot(const std::vector<NamedTensor>& params) {
  std::vector<double> out;
  for (const auto& p : params) out.insert(out.end(), p.tensor.values().begin(), p.tensor.values().end());
  return out;
}

void gradients() {
  const auto t0 = Clock::now();
  double op_error = 0.0;
  int min_instances = 1 << 30;
  std::string worst;
  for (const auto& r : run_op_gradient_suite(20)) {
    if (r.max_relative_error >= op_error) {
      op_error = r.max_relative_error;
      worst = r.op;
    }
    min_instances = std::min(min_instances, r.instances);
  }
  const auto sts = run_sts_gradient_suite(20);
  const double elapsed = seconds_since(t0);
  const double e2e = std::max(sts.head_error, sts.ensemble_error);
  report(1, op_error < 1e-5 && e2e < 1e-4 && min_instances >= 20 && sts.instances >= 20 && elapsed < 120,
         "op max rel err " + fmt("%.2e", op_error) + " (" + worst + "), end-to-end " + fmt("%.2e", e2e) + ", " +
             std::to_string(std::min(min_instances, sts.instances)) + " instances, " + fmt("%.1f s", elapsed));
}

void decomposition() {
  Rng rng(2);
  double sum_err = 0.0, ortho_ratio = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t d = 1 + rng.below(64);
    auto h = random_tensor({1, d}, rng, -5, 5, false);
    auto m = random_tensor({1, d}, rng, -5, 5, false);
    const auto parts = StsHead::orthogonal_decompose(h, m);
    double dot = 0, hn = 0, mn = 0;
    for (std::size_t c = 0; c < d; ++c) {
      sum_err = std::max(sum_err, std::fabs(parts.similar.at(c) + parts.dissimilar.at(c) - h.at(c)));
      dot += parts.dissimilar.at(c) * m.at(c);
      hn += h.at(c) * h.at(c);
      mn += m.at(c) * m.at(c);
    }
    ortho_ratio = std::max(ortho_ratio, std::fabs(dot) / std::sqrt(hn * mn));
  }
  report(2, sum_err < 1e-10 && ortho_ratio < 1e-10,
         "max |h+ + h- - h| " + fmt("%.2e", sum_err) + ", max |h-.m|/(|h||m|) " + fmt("%.2e", ortho_ratio));
}

void rating_algebra() {
  Rng rng(3);
  double round_trip = 0.0, min_kl = 0.0, self_kl = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double y = rng.uniform(0.0, 5.0);
    const auto p = sparse_target(y, 5);
    round_trip = std::max(round_trip, std::fabs(predicted_rating(p) - y));
    std::vector<double> q(6);
    double total = 0;
    for (auto& v : q) total += (v = rng.uniform() + 1e-6);
    for (auto& v : q) v /= total;
    min_kl = std::min(min_kl, kl_loss(p, Tensor({6}, q)).item());
    self_kl = std::max(self_kl, std::fabs(kl_loss(p, Tensor({6}, {p.values().begin(), p.values().end()})).item()));
  }
  report(3, round_trip <= 1e-12 && min_kl >= 0.0 && self_kl < 1e-12,
         "max |r.p(y) - y| " + fmt("%.2e", round_trip) + ", min KL " + fmt("%.2e", min_kl) + ", max KL(p||p) " +
             fmt("%.2e", self_kl));
}

struct Pretrained {
  RunConfig config;
  std::vector<ToySentence> pool;
  Checkpoint checkpoint;
};

Pretrained self_translation(const std::filesystem::path& dir) {
  Pretrained out;
  out.config.seed = 1;
  out.config.validate();
  out.pool = toy_sentences(50, 1);
  const auto t0 = Clock::now();
  auto result = pretrain_mt(out.config, toy_pairs(out.pool), {});
  const double elapsed = seconds_since(t0);
  save_checkpoint(dir, Stage::kMt, out.config, result.tokenizers, result.translator.parameters().entries(),
                  result.summary);
  out.checkpoint = load_checkpoint(dir);
  const double en = result.summary["bleu_train"]["en->en"];
  const double es = result.summary["bleu_train"]["es->es"];
  const double en_es = result.summary["bleu_train"]["en->es"];
  const double es_en = result.summary["bleu_train"]["es->en"];
  report(4, en >= 0.90 && es >= 0.90 && elapsed < 600,
         "self-translation BLEU en->en " + fmt("%.4f", en) + " es->es " + fmt("%.4f", es) + " (cross " +
             fmt("%.4f", en_es) + "/" + fmt("%.4f", es_en) + "), " + std::to_string(out.config.mt.steps) +
             " steps in " + fmt("%.0f s", elapsed));
  return out;
}

std::vector<StsExample> toy_sts(const Pretrained& p, std::size_t n, std::uint64_t seed, const char* lang) {
  return render_sts(toy_sts_pairs(p.pool, n, seed), lang);
}

void freeze_contract(const Pretrained& p) {
  const auto data = toy_sts(p, 40, 11, "en");
  bool ok = true;
  std::string detail;
  for (std::size_t j : {0u, 1u, 2u}) {
    auto config = p.config;
    config.sts.unfreeze_last_n = j;
    config.sts.steps = 100;
    config.sts.eval_every = 50;
    auto model = make_sts_model(config, translator_from_checkpoint(p.checkpoint), p.checkpoint.tokenizers);
    const auto& t = model.translator();
    const std::size_t layers = t.config().encoder_layers;
    const auto embedding = snapshot(t.parameters().with_prefix("encoder.embedding"));
    std::vector<std::vector<double>> before;
    for (std::size_t l = 0; l < layers; ++l) before.push_back(snapshot(t.encoder_layer_parameters(l)));
    train_sts(model, data, data, config.sts, "pearson", config.seed);
    std::size_t changed = 0;
    bool top_only = snapshot(t.parameters().with_prefix("encoder.embedding")) == embedding;
    for (std::size_t l = 0; l < layers; ++l) {
      const bool moved = snapshot(t.encoder_layer_parameters(l)) != before[l];
      changed += moved;
      if (moved != (l >= layers - j)) top_only = false;
    }
    ok = ok && top_only && changed == j;
    detail += "j=" + std::to_string(j) + ": " + std::to_string(changed) + " layers changed; ";
  }
  report(5, ok, detail + "embeddings bitwise unchanged");
}

void overfit(const Pretrained& p) {
  const auto data = toy_sts(p, 40, 12, "en");
  auto config = p.config;
  config.sts.steps = 1000;
  const auto t0 = Clock::now();
  auto run = run_sts_training(config, p.checkpoint, data, data);
  const double r = evaluate_metric("pearson", predict_ratings(run.model, data, "en"), data);
  report(6, r >= 0.95 && config.sts.steps <= 3000,
         "train Pearson " + fmt("%.4f", r) + " after " + std::to_string(config.sts.steps) +
             " steps, frozen encoder, " + fmt("%.0f s", seconds_since(t0)));
}

void ensemble(const Pretrained& p) {
  const auto data = toy_sts(p, 20, 13, "en");
  auto off = p.config;
  off.sts.ensemble = false;
  auto hot = p.config;
  hot.sts.beta_mode = BetaMode::kFixed;
  hot.sts.beta = {1.0, 0.0};
  const auto single = make_sts_model(off, translator_from_checkpoint(p.checkpoint), p.checkpoint.tokenizers);
  const auto one_hot = make_sts_model(hot, translator_from_checkpoint(p.checkpoint), p.checkpoint.tokenizers);
  bool bitwise = true, convex = true;
  for (const auto& e : data) {
    const auto a = single.predict(e.sentence1, e.sentence2, "en");
    const auto b = one_hot.predict(e.sentence1, e.sentence2, "en");
    for (std::size_t k = 0; k < a.numel(); ++k) bitwise = bitwise && a.at(k) == b.at(k);
  }
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    std::vector<Tensor> views;
    for (int v = 0; v < 3; ++v) views.push_back(softmax(random_tensor({1, 6}, rng, -3, 3, false), 1));
    const auto out = ensemble_predict(views, EnsembleWeights::fixed({rng.uniform(), rng.uniform(), rng.uniform() + 1e-9}));
    try {
      RatingDistribution({out.values().begin(), out.values().end()});
    } catch (const std::exception&) {
      convex = false;
    }
  }
  const auto fd = run_sts_gradient_suite(20, 91);
  report(7, bitwise && convex && fd.ensemble_error < 1e-4,
         std::string("one-hot ") + (bitwise ? "bitwise equal" : "differs") + ", convex outputs " +
             (convex ? "valid" : "invalid") + ", learnable beta FD err " + fmt("%.2e", fd.ensemble_error));
}

void metric_oracles() {
  const double pearson = evaluate_pearson(std::vector<double>{1, 1, 3, 4}, std::vector<double>{0, 1, 2, 5});
  const double auc = evaluate_auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<double>{0, 0, 1, 1});
  const std::vector<std::string> cands{"the cat sat on the mat", "a dog runs in the park today", "hello world"};
  const std::vector<std::string> refs{"the cat sat on a mat", "the dog runs in the park", "hello there world"};
  const double bleu = bleu4(cands, refs);
  const double bleu_one = bleu4(std::vector<std::string>{"the cat sat"}, std::vector<std::string>{"the cat sat down"});
  const double e_p = std::fabs(pearson - 0.9258200997725514);
  const double e_a = std::fabs(auc - 0.75);
  const double e_b = std::max(std::fabs(bleu - 0.5773502691896257), std::fabs(bleu_one - 0.7165313105737896));
  report(8, e_p < 1e-9 && e_a < 1e-9 && e_b < 1e-6,
         "Pearson err " + fmt("%.1e", e_p) + ", AUC err " + fmt("%.1e", e_a) + ", BLEU err " + fmt("%.1e", e_b));
}

void persistence(const Pretrained& p) {
  auto config = p.config;
  config.mt.steps = 40;
  config.sts.steps = 40;
  config.sts.eval_every = 20;
  const auto pairs = toy_pairs(p.pool);
  const auto sts = toy_sts(p, 20, 14, "en");
  std::vector<std::map<std::string, std::string>> mt_runs, sts_runs;
  for (int run = 0; run < 2; ++run) {
    const auto mt_dir = scratch_dir("accept_mt_" + std::to_string(run));
    auto result = pretrain_mt(config, pairs, {});
    save_checkpoint(mt_dir, Stage::kMt, config, result.tokenizers, result.translator.parameters().entries(),
                    result.summary);
    mt_runs.push_back(tree(mt_dir));
    const auto sts_dir = scratch_dir("accept_sts_" + std::to_string(run));
    auto trained = run_sts_training(config, load_checkpoint(mt_dir), sts, sts);
    save_checkpoint(sts_dir, Stage::kSts, trained.config, trained.model.tokenizers(), trained.model.all_parameters(),
                    trained.summary);
    sts_runs.push_back(tree(sts_dir));
  }
  const bool deterministic = mt_runs[0] == mt_runs[1] && sts_runs[0] == sts_runs[1];

  const auto again = scratch_dir("accept_resave");
  const auto loaded = load_checkpoint(std::filesystem::temp_directory_path() / "xlsts_accept_sts_0");
  const auto model = sts_model_from_checkpoint(loaded);
  save_checkpoint(again, Stage::kSts, loaded.config, loaded.tokenizers, model.all_parameters(), loaded.extra);
  const bool round_trip = tree(again) == sts_runs[0];

  const auto tok_a = scratch_dir("accept_tok_a");
  const auto tok_b = scratch_dir("accept_tok_b");
  p.checkpoint.tokenizers.save(tok_a);
  TokenizerSet::load(tok_a, p.config.languages).save(tok_b);
  const bool tokenizer_round_trip = tree(tok_a) == tree(tok_b) && !tree(tok_a).empty();
  report(9, deterministic && round_trip && tokenizer_round_trip,
         std::string("same seed checkpoints ") + (deterministic ? "byte-identical" : "differ") + ", save/load/save " +
             (round_trip ? "byte-identical" : "differs") + ", BPE/vocab files " +
             (tokenizer_round_trip ? "byte-identical" : "differ"));
}

void ablation(const Pretrained& p) {
  auto config = p.config;
  config.ablation.sts_steps = 300;
  const auto rich = toy_sts(p, 40, 21, "en");
  const auto low = toy_sts(p, 12, 22, "es");
  const auto dev = toy_sts(p, 20, 23, "es");
  const auto test = toy_sts(p, 60, 24, "es");
  const auto t0 = Clock::now();
  const auto grid = run_ablation(config, p.checkpoint, rich, low, dev, test);
  const auto j = grid.to_json();
  const std::vector<std::string> data{"rich-only", "low-only", "both", "both+multilingual"};
  bool structure = grid.cells.size() == 8 && j["cells"].size() == 8;
  for (std::size_t i = 0; structure && i < 8; ++i) {
    const auto& cell = j["cells"][i];
    structure = cell["data"] == data[i % 4] && cell["pretrained"] == (i >= 4) && cell["seed"] == config.seed &&
                cell["config"]["seed"] == config.seed && cell["config"]["sts"]["ensemble"] == (i % 4 == 3) &&
                cell["config"]["sts"]["steps"] == 300 && config_from_json(cell["config"]).seed == config.seed;
  }
  const double low_scratch = structure ? grid.cells[1].test_metric : 1.0;
  const double best = structure ? grid.cells[7].test_metric : 0.0;
  report(10, structure && low_scratch < best,
         "8 cells with config and seed; w/o pretrained low-only test " + fmt("%.4f", low_scratch) +
             " < pretrained both+multilingual " + fmt("%.4f", best) + ", " + fmt("%.0f s", seconds_since(t0)));
}

}  // namespace

int main() {
  try {
    gradients();
    decomposition();
    rating_algebra();
    const auto pretrained = self_translation(scratch_dir("accept_mt_desk"));
    freeze_contract(pretrained);
    overfit(pretrained);
    ensemble(pretrained);
    metric_oracles();
    persistence(pretrained);
    ablation(pretrained);
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

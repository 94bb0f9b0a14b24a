// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "support/finite_difference.hpp"
#include "xlsts/ensemble.hpp"
#include "xlsts/errors.hpp"
#include "xlsts/ops.hpp"
#include "xlsts/sts.hpp"

using namespace xlsts;
using xlsts::testing::random_tensor;

namespace {

Tensor distribution(Rng& rng, std::size_t levels = 6) {
  auto logits = random_tensor({1, levels}, rng, -2, 2, false);
  return softmax(logits, 1);
}

}  // namespace

TEST_CASE("weights") {
  auto learn = EnsembleWeights::learnable(3);
  CHECK(learn.is_learnable());
  for (double b : learn.values()) CHECK(b == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(learn.parameters().size() == 1);

  auto fixed = EnsembleWeights::fixed({1, 3});
  CHECK(fixed.values() == std::vector<double>{0.25, 0.75});
  CHECK(fixed.parameters().empty());
  CHECK_THROWS_AS(EnsembleWeights::fixed({0, 0}), ConfigError);
  CHECK_THROWS_AS(EnsembleWeights::fixed({-1, 2}), ConfigError);
  CHECK_THROWS_AS(EnsembleWeights::one_hot(2, 2), ConfigError);
}

TEST_CASE("one-hot weights reproduce a single view bit for bit") {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const std::vector<Tensor> views{distribution(rng), distribution(rng), distribution(rng)};
    for (std::size_t k = 0; k < 3; ++k) {
      auto out = ensemble_predict(views, EnsembleWeights::one_hot(3, k));
      for (std::size_t j = 0; j < 6; ++j) CHECK(out.at(j) == views[k].at(j));
    }
  }
}

TEST_CASE("convex combinations") {
  const std::vector<Tensor> hand{Tensor({1, 6}, {1, 0, 0, 0, 0, 0}), Tensor({1, 6}, {0, 1, 0, 0, 0, 0})};
  auto half = ensemble_predict(hand, EnsembleWeights::fixed({0.5, 0.5}));
  CHECK(std::vector<double>(half.values().begin(), half.values().end()) == std::vector<double>{0.5, 0.5, 0, 0, 0, 0});

  Rng rng(8);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::vector<Tensor> views{distribution(rng), distribution(rng)};
    std::vector<double> beta{rng.uniform(), rng.uniform() + 1e-6};
    auto out = ensemble_predict(views, EnsembleWeights::fixed(beta));
    double total = 0;
    for (double p : out.values()) {
      CHECK(p >= 0.0);
      total += p;
    }
    CHECK(std::fabs(total - 1.0) < 1e-12);
    CHECK_NOTHROW(RatingDistribution({out.values().begin(), out.values().end()}));

    const std::vector<Tensor> equal{views[0], views[0]};
    auto same = ensemble_predict(equal, EnsembleWeights::fixed(beta));
    for (std::size_t j = 0; j < 6; ++j) CHECK(std::fabs(same.at(j) - views[0].at(j)) < 1e-15);
  }
  const std::vector<Tensor> one{distribution(rng)};
  CHECK_THROWS_AS(ensemble_predict(one, EnsembleWeights::learnable(2)), DimensionError);
}

TEST_CASE("beta logits gradient") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    auto weights = EnsembleWeights::learnable(3);
    for (auto& x : weights.logits().mutable_values()) x = rng.uniform(-1, 1);
    auto z = random_tensor({3, 6}, rng, -2, 2);
    const auto target = sparse_target(rng.uniform(0.0, 5.0), 5);
    auto r = xlsts::testing::check_gradients(
        [&] {
          auto probs = softmax(z, 1);
          const std::vector<Tensor> views{slice_rows(probs, 0, 1), slice_rows(probs, 1, 1), slice_rows(probs, 2, 1)};
          return kl_loss(target, ensemble_predict(views, weights));
        },
        {weights.logits(), z});
    CHECK(r.max_relative_error < 1e-4);
  }
}

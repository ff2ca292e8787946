// Copyright 2026 The Protosound Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "protosound/objective.hpp"
#include "protosound/rng.hpp"
#include "support/gradcheck.hpp"

using namespace protosound;

namespace {

EmbeddingMap random_map(int h, int w, int d, std::uint64_t seed) {
  EmbeddingMap z;
  z.h = h;
  z.w = w;
  z.d = d;
  z.values.resize(static_cast<std::size_t>(h) * w * d);
  Rng rng(seed);
  for (double& v : z.values) {
    v = rng.normal();
  }
  return z;
}

}  // namespace

TEST_CASE("asym loss hand values") {
  LossConfig cfg;
  cfg.gamma_pos = 0.0;
  cfg.gamma_neg = 2.0;
  cfg.clip_margin = 0.05;

  // y = 0, p = 0.5: pm = 0.45, contribution 0.45^2 * (-ln 0.55).
  const auto neg = asym_loss({0.5}, {0}, 1, 1, cfg);
  CHECK(neg.loss == doctest::Approx(0.45 * 0.45 * -std::log(0.55)).epsilon(1e-12));
  CHECK(neg.loss == doctest::Approx(0.121062).epsilon(1e-4));

  // y = 0, p <= m: exactly zero, gradient zero.
  const auto clipped = asym_loss({0.04}, {0}, 1, 1, cfg);
  CHECK(clipped.loss == 0.0);
  CHECK(clipped.dloss_dlogits[0] == 0.0);

  // y = 1, p -> 1: contribution -> 0.
  const auto confident = asym_loss({1.0 - 1e-9}, {1}, 1, 1, cfg);
  CHECK(confident.loss < 1e-6);
  CHECK(std::abs(confident.dloss_dlogits[0]) < 1e-6);
}

TEST_CASE("asym loss reduces to binary cross-entropy at gamma = m = 0") {
  LossConfig cfg;
  cfg.gamma_pos = 0.0;
  cfg.gamma_neg = 0.0;
  cfg.clip_margin = 0.0;
  Rng rng(3);
  const int n = 7, c = 5;
  std::vector<double> conf(n * c);
  std::vector<std::uint8_t> labels(n * c);
  for (int i = 0; i < n * c; ++i) {
    conf[i] = rng.uniform(0.02, 0.98);
    labels[i] = rng.bernoulli(0.4) ? 1 : 0;
  }
  const auto result = asym_loss(conf, labels, n, c, cfg);
  // Textbook mean BCE as the oracle.
  double bce = 0.0;
  for (int i = 0; i < n * c; ++i) {
    bce += labels[i] ? -std::log(conf[i]) : -std::log(1.0 - conf[i]);
  }
  bce /= n * c;
  CHECK(result.loss == doctest::Approx(bce).epsilon(1e-9));
}

TEST_CASE("asym loss validates shapes and labels") {
  LossConfig cfg;
  CHECK_THROWS_AS(asym_loss({0.5, 0.5}, {0}, 1, 2, cfg), std::invalid_argument);
  CHECK_THROWS_AS(asym_loss({0.5}, {2}, 1, 1, cfg), std::invalid_argument);
  cfg.clip_margin = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("ortho loss identities") {
  // Orthonormal prototypes: exactly zero.
  PrototypeBank bank = init_bank(1, 2, 4, 0);
  for (int k = 0; k < 4; ++k) {
    bank.prototype(0, 0)[k] = k == 0 ? 1.0 : 0.0;
    bank.prototype(0, 1)[k] = k == 1 ? 1.0 : 0.0;
  }
  CHECK(ortho_loss(bank).loss == doctest::Approx(0.0).epsilon(1e-15));

  // Duplicated pair: ||P P^T - I||_F^2 = 2, normalized by C J^2 = 4.
  for (int k = 0; k < 4; ++k) {
    bank.prototype(0, 1)[k] = bank.prototype(0, 0)[k];
  }
  CHECK(ortho_loss(bank).loss == doctest::Approx(0.5).epsilon(1e-12));

  // J = 1 is always zero.
  const PrototypeBank single = init_bank(3, 1, 5, 1);
  CHECK(ortho_loss(single).loss == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("ortho loss is scale invariant with tangent gradients") {
  PrototypeBank bank = init_bank(2, 3, 6, 9);
  const OrthoResult base = ortho_loss(bank);
  PrototypeBank scaled = bank;
  for (int k = 0; k < 6; ++k) {
    scaled.prototype(0, 1)[k] *= 11.0;
  }
  CHECK(ortho_loss(scaled).loss == doctest::Approx(base.loss).epsilon(1e-12));

  // Gradient of a scale-invariant function is orthogonal to each prototype.
  for (int c = 0; c < 2; ++c) {
    for (int j = 0; j < 3; ++j) {
      double dot = 0.0, norm = 0.0;
      const double* p = bank.prototype(c, j);
      const double* g = base.dloss_dprototypes.data() +
                        (static_cast<std::size_t>(c) * 3 + j) * 6;
      for (int k = 0; k < 6; ++k) {
        dot += p[k] * g[k];
        norm += g[k] * g[k];
      }
      CHECK(std::abs(dot) < 1e-6 * std::max(1.0, std::sqrt(norm)));
    }
  }

  PrototypeBank degenerate = bank;
  for (int k = 0; k < 6; ++k) {
    degenerate.prototype(1, 0)[k] = 0.0;
  }
  CHECK_THROWS_AS(ortho_loss(degenerate), std::invalid_argument);
}

TEST_CASE("total loss composes exactly and routes gradients through argmax") {
  PrototypeBank bank = init_bank(2, 2, 4, 5);
  std::vector<EmbeddingMap> batch{random_map(2, 3, 4, 1), random_map(2, 3, 4, 2)};
  std::vector<std::vector<std::uint8_t>> labels{{1, 0}, {0, 1}};
  LossConfig cfg;
  cfg.lambda_ortho = 0.7;
  const LossReport report = total_loss_and_grads(batch, labels, bank, cfg);
  CHECK(report.total == doctest::Approx(report.asym + 0.7 * report.ortho).epsilon(1e-15));

  // lambda = 0 removes the ortho contribution from the prototype gradient.
  LossConfig no_ortho = cfg;
  no_ortho.lambda_ortho = 0.0;
  const LossReport without = total_loss_and_grads(batch, labels, bank, no_ortho);
  const OrthoResult ortho = ortho_loss(bank);
  for (std::size_t i = 0; i < report.grad_prototypes.size(); ++i) {
    CHECK(report.grad_prototypes[i] ==
          doctest::Approx(without.grad_prototypes[i] + 0.7 * ortho.dloss_dprototypes[i])
              .epsilon(1e-9));
  }
  CHECK(without.total == doctest::Approx(without.asym).epsilon(1e-15));
}

TEST_CASE("gradients vanish at matched extreme confidences") {
  // One class per instance, confidences pushed to the extremes by a huge bias.
  PrototypeBank bank = init_bank(2, 1, 3, 6);
  bank.head_bias = {30.0, -30.0};
  std::vector<EmbeddingMap> batch{random_map(1, 2, 3, 3)};
  std::vector<std::vector<std::uint8_t>> labels{{1, 0}};
  LossConfig cfg;
  cfg.lambda_ortho = 0.0;
  const LossReport report = total_loss_and_grads(batch, labels, bank, cfg);
  CHECK(report.grad_norm() < 1e-6);
}

TEST_CASE("finite differences confirm every analytic gradient entry") {
  const auto result = testsupport::gradient_check(10, 0xfeed);
  CHECK(result.trials == 10);
  CHECK(result.max_rel_err < 1e-3);
}

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

#include "support/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "protosound/rng.hpp"

namespace protosound::testsupport {

namespace {

constexpr double kStep = 1e-4;

struct Trial {
  PrototypeBank bank;
  std::vector<EmbeddingMap> batch;
  std::vector<std::vector<std::uint8_t>> labels;
  LossConfig cfg;
};

Trial draw_trial(Rng& rng) {
  Trial trial;
  const int C = 1 + static_cast<int>(rng.below(4));
  const int J = 1 + static_cast<int>(rng.below(3));
  const int D = 2 + static_cast<int>(rng.below(7));
  const int H = 1 + static_cast<int>(rng.below(5));
  const int W = 1 + static_cast<int>(rng.below(5));
  const int N = 1 + static_cast<int>(rng.below(3));

  trial.bank = init_bank(C, J, D, rng.next_u64());
  for (double& w : trial.bank.head_weights) {
    w = rng.uniform(0.0, 2.0);
  }
  for (double& b : trial.bank.head_bias) {
    b = rng.uniform(-3.0, 1.0);
  }
  for (double& p : trial.bank.prototypes) {
    p += 0.3 * rng.normal();
  }

  for (int n = 0; n < N; ++n) {
    EmbeddingMap z;
    z.h = H;
    z.w = W;
    z.d = D;
    z.values.resize(static_cast<std::size_t>(H) * W * D);
    for (double& v : z.values) {
      v = rng.normal();
    }
    trial.batch.push_back(std::move(z));
    std::vector<std::uint8_t> y(C);
    for (auto& value : y) {
      value = rng.bernoulli(0.5) ? 1 : 0;
    }
    trial.labels.push_back(std::move(y));
  }

  const double gammas_pos[] = {0.0, 0.5, 2.0};
  const double gammas_neg[] = {0.0, 1.0, 2.0};
  const double margins[] = {0.0, 0.05, 0.2};
  const double lambdas[] = {0.0, 0.5, 1.0};
  trial.cfg.gamma_pos = gammas_pos[rng.below(3)];
  trial.cfg.gamma_neg = gammas_neg[rng.below(3)];
  trial.cfg.clip_margin = margins[rng.below(3)];
  trial.cfg.lambda_ortho = lambdas[rng.below(3)];
  return trial;
}

// Finite differences assume local smoothness: reject draws sitting within a
// few steps of a max-pool tie or the negative-loss clip boundary.
bool differentiable_at(const Trial& trial) {
  for (const auto& z : trial.batch) {
    const SimilarityResult sim = similarity(z, trial.bank);
    const int cells = sim.h * sim.w;
    for (std::size_t p = 0; p < sim.pooled.size(); ++p) {
      double second = -2.0;
      const double* map = sim.maps.data() + p * cells;
      for (int cell = 0; cell < cells; ++cell) {
        if (map[cell] < sim.pooled[p] && map[cell] > second) {
          second = map[cell];
        }
      }
      int top_count = 0;
      for (int cell = 0; cell < cells; ++cell) {
        if (map[cell] == sim.pooled[p]) ++top_count;
      }
      if (top_count > 1 || (cells > 1 && sim.pooled[p] - second < 1e-3)) {
        return false;
      }
    }
    const Prediction pred = predict(sim, trial.bank);
    for (int c = 0; c < trial.bank.num_classes; ++c) {
      if (std::abs(pred.logits[c]) > 14.0) return false;  // clamp zone
      if (std::abs(pred.confidences[c] - trial.cfg.clip_margin) < 1e-3) return false;
    }
  }
  return true;
}

double loss_at(const Trial& trial, const PrototypeBank& bank) {
  return total_loss_and_grads(trial.batch, trial.labels, bank, trial.cfg).total;
}

void check_parameter(const Trial& trial, PrototypeBank& bank, double* param,
                     double analytic, GradCheckResult& result) {
  const double saved = *param;
  *param = saved + kStep;
  const double up = loss_at(trial, bank);
  *param = saved - kStep;
  const double down = loss_at(trial, bank);
  *param = saved;
  const double fd = (up - down) / (2.0 * kStep);
  const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-5});
  const double rel = std::abs(analytic - fd) / denom;
  result.max_rel_err = std::max(result.max_rel_err, rel);
  result.entries_checked += 1;
}

}  // namespace

GradCheckResult gradient_check(int trials, std::uint64_t seed) {
  Rng rng(seed);
  GradCheckResult result;
  while (result.trials < trials) {
    Trial trial = draw_trial(rng);
    if (!differentiable_at(trial)) {
      result.resampled += 1;
      continue;
    }
    const LossReport report =
        total_loss_and_grads(trial.batch, trial.labels, trial.bank, trial.cfg);
    PrototypeBank& bank = trial.bank;
    for (std::size_t i = 0; i < bank.prototypes.size(); ++i) {
      check_parameter(trial, bank, &bank.prototypes[i], report.grad_prototypes[i], result);
    }
    for (std::size_t i = 0; i < bank.head_weights.size(); ++i) {
      check_parameter(trial, bank, &bank.head_weights[i], report.grad_weights[i], result);
    }
    for (std::size_t i = 0; i < bank.head_bias.size(); ++i) {
      check_parameter(trial, bank, &bank.head_bias[i], report.grad_bias[i], result);
    }
    result.trials += 1;
  }
  return result;
}

}  // namespace protosound::testsupport

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

#include "protosound/objective.hpp"

#include <cmath>
#include <stdexcept>

#include "protosound/kernels.hpp"

namespace protosound {

namespace {

constexpr double kConfClamp = 1e-7;

}  // namespace

void LossConfig::validate() const {
  if (gamma_pos < 0.0 || gamma_neg < 0.0) {
    throw std::invalid_argument("focusing exponents must be non-negative");
  }
  if (clip_margin < 0.0 || clip_margin >= 1.0) {
    throw std::invalid_argument("clip_margin must be in [0, 1)");
  }
  if (lambda_ortho < 0.0) throw std::invalid_argument("lambda_ortho must be non-negative");
}

AsymLossResult asym_loss(const std::vector<double>& confidences,
                         const std::vector<std::uint8_t>& labels, int n, int c,
                         const LossConfig& cfg) {
  cfg.validate();
  const std::size_t count = static_cast<std::size_t>(n) * c;
  if (confidences.size() != count || labels.size() != count || n < 1 || c < 1) {
    throw std::invalid_argument("confidence/label shape mismatch");
  }
  AsymLossResult result;
  result.dloss_dlogits.assign(count, 0.0);
  const double scale = 1.0 / static_cast<double>(count);
  double loss = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw std::invalid_argument("labels must be binary");
    }
    const double p_raw = confidences[i];
    const bool clamped = p_raw < kConfClamp || p_raw > 1.0 - kConfClamp;
    const double p = std::min(std::max(p_raw, kConfClamp), 1.0 - kConfClamp);
    double term;
    double dterm_dp;
    if (labels[i] == 1) {
      const double focus = cfg.gamma_pos > 0.0 ? std::pow(1.0 - p, cfg.gamma_pos) : 1.0;
      term = -focus * std::log(p);
      dterm_dp = -focus / p;
      if (cfg.gamma_pos > 0.0) {
        dterm_dp += cfg.gamma_pos * std::pow(1.0 - p, cfg.gamma_pos - 1.0) * std::log(p);
      }
    } else {
      const double pm = std::max(p - cfg.clip_margin, 0.0);
      if (pm <= 0.0) {
        term = 0.0;
        dterm_dp = 0.0;  // subgradient 0 at the clip boundary
      } else {
        const double focus = cfg.gamma_neg > 0.0 ? std::pow(pm, cfg.gamma_neg) : 1.0;
        term = -focus * std::log(1.0 - pm);
        dterm_dp = focus / (1.0 - pm);
        if (cfg.gamma_neg > 0.0) {
          dterm_dp -= cfg.gamma_neg * std::pow(pm, cfg.gamma_neg - 1.0) * std::log(1.0 - pm);
        }
      }
    }
    loss += term;
    // The clamp is flat, so its region contributes no logit gradient.
    const double dsigmoid = clamped ? 0.0 : p_raw * (1.0 - p_raw);
    result.dloss_dlogits[i] = scale * dterm_dp * dsigmoid;
  }
  result.loss = loss * scale;
  return result;
}

OrthoResult ortho_loss(const PrototypeBank& bank) {
  const int C = bank.num_classes;
  const int J = bank.per_class;
  const int D = bank.dim;
  OrthoResult result;
  result.dloss_dprototypes.assign(static_cast<std::size_t>(C) * J * D, 0.0);
  const double scale = 1.0 / (static_cast<double>(C) * J * J);

  std::vector<double> unit(static_cast<std::size_t>(J) * D);
  std::vector<double> norms(J);
  std::vector<double> gram(static_cast<std::size_t>(J) * J);
  std::vector<double> gtilde(D);
  for (int c = 0; c < C; ++c) {
    for (int j = 0; j < J; ++j) {
      const double* p = bank.prototype(c, j);
      const double norm_sq = kernels::sum_squares(p, D);
      if (norm_sq < 1e-16) throw std::invalid_argument("zero-norm prototype");
      norms[j] = std::sqrt(norm_sq);
      kernels::scale_shift(p, 1.0 / norms[j], 0.0, unit.data() + static_cast<std::size_t>(j) * D,
                           D);
    }
    // A = P~ P~^T - I; loss_c = ||A||_F^2.
    double loss_c = 0.0;
    for (int j = 0; j < J; ++j) {
      for (int k = 0; k < J; ++k) {
        double a = kernels::dot(unit.data() + static_cast<std::size_t>(j) * D,
                                unit.data() + static_cast<std::size_t>(k) * D, D);
        if (j == k) a -= 1.0;
        gram[static_cast<std::size_t>(j) * J + k] = a;
        loss_c += a * a;
      }
    }
    result.loss += loss_c;
    // d loss_c / d p~_j = 4 sum_k A_jk p~_k, then projected through the
    // normalization: (g - (g . p~) p~) / ||p||.
    for (int j = 0; j < J; ++j) {
      std::fill(gtilde.begin(), gtilde.end(), 0.0);
      for (int k = 0; k < J; ++k) {
        const double a = gram[static_cast<std::size_t>(j) * J + k];
        if (a != 0.0) {
          kernels::axpy(4.0 * a, unit.data() + static_cast<std::size_t>(k) * D, gtilde.data(), D);
        }
      }
      const double* uj = unit.data() + static_cast<std::size_t>(j) * D;
      const double radial = kernels::dot(gtilde.data(), uj, D);
      double* out = result.dloss_dprototypes.data() +
                    (static_cast<std::size_t>(c) * J + j) * D;
      kernels::axpy(scale / norms[j], gtilde.data(), out, D);
      kernels::axpy(-scale * radial / norms[j], uj, out, D);
    }
  }
  result.loss *= scale;
  return result;
}

double LossReport::grad_norm() const {
  double acc = kernels::sum_squares(grad_prototypes.data(), grad_prototypes.size());
  acc += kernels::sum_squares(grad_weights.data(), grad_weights.size());
  acc += kernels::sum_squares(grad_bias.data(), grad_bias.size());
  return std::sqrt(acc);
}

LossReport total_loss_and_grads(const std::vector<EmbeddingMap>& batch,
                                const std::vector<std::vector<std::uint8_t>>& labels,
                                const PrototypeBank& bank, const LossConfig& cfg) {
  cfg.validate();
  if (batch.empty() || batch.size() != labels.size()) {
    throw std::invalid_argument("batch/label size mismatch");
  }
  const int N = static_cast<int>(batch.size());
  const int C = bank.num_classes;
  const int J = bank.per_class;
  const int D = bank.dim;

  LossReport report;
  report.grad_prototypes.assign(static_cast<std::size_t>(C) * J * D, 0.0);
  report.grad_weights.assign(static_cast<std::size_t>(C) * J, 0.0);
  report.grad_bias.assign(C, 0.0);

  // Forward pass: pooled similarities, argmax cells, confidences.
  std::vector<SimilarityResult> sims;
  sims.reserve(N);
  std::vector<double> confidences(static_cast<std::size_t>(N) * C);
  std::vector<std::uint8_t> flat_labels(static_cast<std::size_t>(N) * C);
  for (int n = 0; n < N; ++n) {
    if (static_cast<int>(labels[n].size()) != C) {
      throw std::invalid_argument("label vector length mismatch");
    }
    sims.push_back(similarity(batch[n], bank));
    const Prediction pred = predict(sims.back(), bank);
    for (int c = 0; c < C; ++c) {
      confidences[static_cast<std::size_t>(n) * C + c] = pred.confidences[c];
      flat_labels[static_cast<std::size_t>(n) * C + c] = labels[n][c];
    }
  }

  const AsymLossResult asym = asym_loss(confidences, flat_labels, N, C, cfg);
  report.asym = asym.loss;

  // Prototype norms and unit directions, shared across instances.
  std::vector<double> proto_norm(static_cast<std::size_t>(C) * J);
  std::vector<double> proto_unit(bank.prototypes.size());
  for (int c = 0; c < C; ++c) {
    for (int j = 0; j < J; ++j) {
      const std::size_t idx = static_cast<std::size_t>(c) * J + j;
      const double* p = bank.prototype(c, j);
      proto_norm[idx] = std::sqrt(kernels::sum_squares(p, D));
      kernels::scale_shift(p, 1.0 / proto_norm[idx], 0.0, proto_unit.data() + idx * D, D);
    }
  }

  std::vector<double> zunit(D);
  for (int n = 0; n < N; ++n) {
    const SimilarityResult& sim = sims[n];
    const EmbeddingMap& z = batch[n];
    for (int c = 0; c < C; ++c) {
      const double dlogit = asym.dloss_dlogits[static_cast<std::size_t>(n) * C + c];
      if (dlogit == 0.0) continue;
      report.grad_bias[c] += dlogit;
      for (int j = 0; j < J; ++j) {
        const std::size_t idx = static_cast<std::size_t>(c) * J + j;
        const double pooled = sim.pooled[idx];
        report.grad_weights[idx] += dlogit * pooled;
        const double gpool = dlogit * bank.head_weights[idx];
        if (gpool == 0.0) continue;
        const auto [ay, ax] = sim.argmax[idx];
        const double* cell = z.cell(ay, ax);
        const double cell_norm_sq = kernels::sum_squares(cell, D);
        if (cell_norm_sq <= 0.0) continue;  // similarity pinned to 0, no gradient
        kernels::scale_shift(cell, 1.0 / std::sqrt(cell_norm_sq), 0.0, zunit.data(), D);
        // d s / d p = (z~ - s p~) / ||p|| at the winning cell.
        double* gp = report.grad_prototypes.data() + idx * D;
        const double inv_norm = 1.0 / proto_norm[idx];
        kernels::axpy(gpool * inv_norm, zunit.data(), gp, D);
        kernels::axpy(-gpool * pooled * inv_norm, proto_unit.data() + idx * D, gp, D);
      }
    }
  }

  const OrthoResult ortho = ortho_loss(bank);
  report.ortho = ortho.loss;
  if (cfg.lambda_ortho != 0.0) {
    kernels::axpy(cfg.lambda_ortho, ortho.dloss_dprototypes.data(),
                  report.grad_prototypes.data(), report.grad_prototypes.size());
  }
  report.total = report.asym + cfg.lambda_ortho * report.ortho;
  return report;
}

}  // namespace protosound

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

#pragma once

#include <cstdint>
#include <vector>

#include "protosound/protonet.hpp"

namespace protosound {

struct LossConfig {
  double gamma_pos = 0.0;    // focusing exponent for positives
  double gamma_neg = 2.0;    // focusing exponent for negatives
  double clip_margin = 0.05; // probability shift for negatives, in [0, 1)
  double lambda_ortho = 1.0; // weight of the orthogonality term

  void validate() const;
};

// Classification loss and its gradient with respect to the logits.
// Per element: y=1 -> -(1-p)^gp * log p; y=0 -> -(pm)^gn * log(1-pm) with
// pm = max(p - m, 0); mean over N x C. Confidences are clamped to
// [1e-7, 1-1e-7] for log stability; in the clamped region the gradient is 0.
struct AsymLossResult {
  double loss = 0.0;
  std::vector<double> dloss_dlogits;  // N x C
};
AsymLossResult asym_loss(const std::vector<double>& confidences,
                         const std::vector<std::uint8_t>& labels, int n, int c,
                         const LossConfig& cfg);

// Normalized orthogonality penalty over each class's unit-normalized
// prototypes: (1 / (C J^2)) sum_c || P~ P~^T - I ||_F^2, with the analytic
// gradient taken through the normalization.
struct OrthoResult {
  double loss = 0.0;
  std::vector<double> dloss_dprototypes;  // C x J x D
};
OrthoResult ortho_loss(const PrototypeBank& bank);

// Full objective for one batch: asym + lambda * ortho, with exact gradients
// for prototypes, head weights and biases. Classification gradient reaches a
// prototype only through the argmax cell of each instance (max-pool routing);
// the embedding side is a constant (frozen backbone).
struct LossReport {
  double asym = 0.0;
  double ortho = 0.0;
  double total = 0.0;
  std::vector<double> grad_prototypes;  // C x J x D
  std::vector<double> grad_weights;     // C x J
  std::vector<double> grad_bias;        // C

  double grad_norm() const;
};
LossReport total_loss_and_grads(const std::vector<EmbeddingMap>& batch,
                                const std::vector<std::vector<std::uint8_t>>& labels,
                                const PrototypeBank& bank, const LossConfig& cfg);

}  // namespace protosound

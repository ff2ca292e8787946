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
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "protosound/embed.hpp"

namespace protosound {

// C x J prototype vectors plus the class-wired non-negative head. Class c's
// logit depends only on prototypes (c, .): the wiring is block-diagonal by
// construction, so only the nonzero C x J weight block is stored.
struct PrototypeBank {
  int num_classes = 0;  // C
  int per_class = 0;    // J
  int dim = 0;          // D
  std::vector<double> prototypes;    // C x J x D
  std::vector<double> head_weights;  // C x J, >= 0
  std::vector<double> head_bias;     // C
  std::vector<std::string> class_names;  // optional, length C when present

  double* prototype(int c, int j) {
    return prototypes.data() + (static_cast<std::size_t>(c) * per_class + j) * dim;
  }
  const double* prototype(int c, int j) const {
    return prototypes.data() + (static_cast<std::size_t>(c) * per_class + j) * dim;
  }
  double& weight(int c, int j) { return head_weights[static_cast<std::size_t>(c) * per_class + j]; }
  double weight(int c, int j) const {
    return head_weights[static_cast<std::size_t>(c) * per_class + j];
  }
  void validate() const;
};

// Per-prototype cosine similarity maps over the embedding grid, their global
// max-pool, and the (first-occurrence, row-major) argmax cell of each map.
struct SimilarityResult {
  int num_classes = 0;
  int per_class = 0;
  int h = 0;
  int w = 0;
  std::vector<double> maps;    // C x J x H x W, values in [-1, 1]
  std::vector<double> pooled;  // C x J
  std::vector<std::pair<int, int>> argmax;  // C x J -> (h, w)

  const double* map(int c, int j) const {
    return maps.data() + (static_cast<std::size_t>(c) * per_class + j) *
                             (static_cast<std::size_t>(h) * w);
  }
  double pooled_at(int c, int j) const {
    return pooled[static_cast<std::size_t>(c) * per_class + j];
  }
};

struct Prediction {
  std::vector<double> logits;
  std::vector<double> confidences;  // sigmoid(logits)
};

double sigmoid(double x);

// Head weights 1, biases -2, prototypes i.i.d. unit vectors from the seed.
PrototypeBank init_bank(int num_classes, int per_class, int dim, std::uint64_t seed);

// Cosine similarity of every prototype against every embedding cell. A
// zero-norm cell yields similarity 0 (no gradient there).
SimilarityResult similarity(const EmbeddingMap& z, const PrototypeBank& bank);

// logit_c = sum_j weight(c, j) * pooled(c, j) + bias_c, then sigmoid.
Prediction predict(const SimilarityResult& sim, const PrototypeBank& bank);

// Checkpoint: binary little-endian, magic "APPB", u32 version, u32 C, u32 J,
// u32 D, float32 prototypes (C,J,D row-major), float32 head_weights (C,J),
// float32 head_bias (C), u32 trailer length, JSON trailer (class names and
// training metadata).
void save_checkpoint(const std::string& path, const PrototypeBank& bank,
                     const nlohmann::json& metadata);
PrototypeBank load_checkpoint(const std::string& path, nlohmann::json* metadata = nullptr);

}  // namespace protosound

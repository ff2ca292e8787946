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
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "protosound/objective.hpp"

namespace protosound {

struct TrainConfig {
  int epochs = 10;
  int batch_size = 64;
  double lr_prototypes = 0.05;
  double lr_head = 5e-4;
  double weight_decay = 1e-4;
  double warmup_ratio = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

// Linear ramp 0 -> base_lr over warmup_ratio * total_steps, then cosine decay
// to 0 at total_steps.
double lr_at(long step, long total_steps, double base_lr, double warmup_ratio);

struct TrainItem {
  std::string id;
  std::vector<std::uint8_t> labels;
  EmbeddingMap embedding;
};

// Materializes one shuffled batch for the given epoch. Batch-level so the
// waveform-mode pipeline can apply mixup across the batch before embedding;
// the embedding-mode loader just gathers precomputed items and ignores the
// epoch and batch index.
using BatchLoader = std::function<std::vector<TrainItem>(
    const std::vector<std::size_t>& indices, int epoch, std::size_t batch_index)>;

struct AdamMoments {
  std::vector<double> m;
  std::vector<double> v;
};

struct TrainState {
  long step = 0;
  int epochs_done = 0;
  PrototypeBank bank;
  AdamMoments adam_prototypes;  // group 1: lr_prototypes, weight decay
  AdamMoments adam_weights;     // group 2: lr_head, weight decay
  AdamMoments adam_bias;        // group 2: lr_head, no weight decay
  double best_val_loss = 0.0;
  bool has_best = false;
  std::string best_checkpoint_path;
};

TrainState init_train_state(PrototypeBank bank);

// One pass over the shuffled dataset: forward, total_loss_and_grads, AdamW
// update per parameter group, then project head weights back to >= 0.
// Deterministic for a fixed (seed, data, config). Throws on non-finite loss
// with the offending batch ids in the message.
void train_epoch(TrainState& state, const BatchLoader& loader, std::size_t dataset_size,
                 const TrainConfig& cfg, const LossConfig& loss_cfg, long total_steps,
                 std::ostream* log);

// Mean objective over the full set with augmentations off; mutates nothing.
double validate(const TrainState& state, const std::vector<TrainItem>& items,
                const LossConfig& loss_cfg, int batch_size = 64);

struct TrainResult {
  PrototypeBank bank;           // final parameters
  double best_val_loss = 0.0;
  int best_epoch = -1;
  std::string best_checkpoint_path;
};

// Full phase-2 loop: epochs of train_epoch, validation once per epoch, best
// checkpoint kept by validation loss. run_dir (when non-empty) receives
// train_log.jsonl, checkpoint_best.appb and the optimizer-state sidecar.
// Pass a state loaded from load_train_state to resume.
TrainResult fit(TrainState state, const BatchLoader& loader, std::size_t train_size,
                const std::vector<TrainItem>& val_items, const TrainConfig& cfg,
                const LossConfig& loss_cfg, const std::string& run_dir,
                const nlohmann::json& checkpoint_metadata);

// Optimizer-state sidecar ("APOS"): full double-precision parameters and Adam
// moments, so resuming reproduces the in-memory trajectory exactly.
void save_train_state(const std::string& path, const TrainState& state);
TrainState load_train_state(const std::string& path);

}  // namespace protosound

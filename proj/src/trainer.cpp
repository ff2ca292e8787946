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

#include "protosound/trainer.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "protosound/kernels.hpp"
#include "protosound/rng.hpp"

namespace protosound {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr char kSidecarMagic[4] = {'A', 'P', 'O', 'S'};
constexpr std::uint32_t kSidecarVersion = 1;
constexpr double kMinPrototypeNorm = 1e-8;

std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) {
    perm[i] = i;
  }
  Rng rng = Rng::substream(seed, {static_cast<std::uint64_t>(epoch), 0x5bu});
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

void apply_group(std::vector<double>& params, const std::vector<double>& grads,
                 AdamMoments& moments, double lr, double weight_decay,
                 const TrainConfig& cfg, long step) {
  kernels::AdamStep s;
  s.lr = lr;
  s.beta1 = cfg.beta1;
  s.beta2 = cfg.beta2;
  s.eps = cfg.eps_adam;
  s.weight_decay = weight_decay;
  s.bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  s.bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  kernels::adamw_update(params.data(), grads.data(), moments.m.data(), moments.v.data(),
                        params.size(), s);
}

// A prototype driven to (near) zero length has no defined direction for the
// cosine; nudge it back above the norm floor.
void restore_prototype_norms(PrototypeBank& bank) {
  for (int c = 0; c < bank.num_classes; ++c) {
    for (int j = 0; j < bank.per_class; ++j) {
      double* p = bank.prototype(c, j);
      const double norm = std::sqrt(kernels::sum_squares(p, bank.dim));
      if (norm >= kMinPrototypeNorm) continue;
      if (norm < 1e-300) {
        p[0] = kMinPrototypeNorm;
      } else {
        kernels::scale_shift(p, kMinPrototypeNorm / norm, 0.0, p, bank.dim);
      }
    }
  }
}

void write_u32(std::ofstream& f, std::uint32_t v) {
  f.write(reinterpret_cast<const char*>(&v), 4);
}

void write_i64(std::ofstream& f, std::int64_t v) {
  f.write(reinterpret_cast<const char*>(&v), 8);
}

void write_f64(std::ofstream& f, double v) { f.write(reinterpret_cast<const char*>(&v), 8); }

void write_f64_array(std::ofstream& f, const std::vector<double>& a) {
  f.write(reinterpret_cast<const char*>(a.data()),
          static_cast<std::streamsize>(a.size() * sizeof(double)));
}

template <typename T>
T read_pod(std::ifstream& f, const char* what) {
  T v;
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!f) throw std::runtime_error(std::string("truncated optimizer state: ") + what);
  return v;
}

void read_f64_array(std::ifstream& f, std::vector<double>& a, const char* what) {
  f.read(reinterpret_cast<char*>(a.data()),
         static_cast<std::streamsize>(a.size() * sizeof(double)));
  if (!f) throw std::runtime_error(std::string("truncated optimizer state: ") + what);
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (lr_prototypes < 0.0 || lr_head < 0.0) {
    throw std::invalid_argument("learning rates must be non-negative");
  }
  if (warmup_ratio < 0.0 || warmup_ratio >= 1.0) {
    throw std::invalid_argument("warmup_ratio must be in [0, 1)");
  }
  if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be non-negative");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw std::invalid_argument("betas must be in [0, 1)");
  }
  if (eps_adam <= 0.0) throw std::invalid_argument("eps_adam must be positive");
}

double lr_at(long step, long total_steps, double base_lr, double warmup_ratio) {
  if (total_steps <= 0) throw std::invalid_argument("total_steps must be positive");
  if (step < 0 || step > total_steps) throw std::invalid_argument("step out of range");
  const double warmup_steps = warmup_ratio * static_cast<double>(total_steps);
  if (static_cast<double>(step) < warmup_steps) {
    return base_lr * static_cast<double>(step) / warmup_steps;
  }
  const double denom = static_cast<double>(total_steps) - warmup_steps;
  const double progress = denom > 0.0 ? (static_cast<double>(step) - warmup_steps) / denom : 1.0;
  return base_lr * 0.5 * (1.0 + std::cos(kPi * progress));
}

TrainState init_train_state(PrototypeBank bank) {
  TrainState state;
  state.bank = std::move(bank);
  state.adam_prototypes.m.assign(state.bank.prototypes.size(), 0.0);
  state.adam_prototypes.v.assign(state.bank.prototypes.size(), 0.0);
  state.adam_weights.m.assign(state.bank.head_weights.size(), 0.0);
  state.adam_weights.v.assign(state.bank.head_weights.size(), 0.0);
  state.adam_bias.m.assign(state.bank.head_bias.size(), 0.0);
  state.adam_bias.v.assign(state.bank.head_bias.size(), 0.0);
  state.best_val_loss = std::numeric_limits<double>::infinity();
  return state;
}

void train_epoch(TrainState& state, const BatchLoader& loader, std::size_t dataset_size,
                 const TrainConfig& cfg, const LossConfig& loss_cfg, long total_steps,
                 std::ostream* log) {
  cfg.validate();
  if (dataset_size == 0) throw std::invalid_argument("dataset is empty");
  const auto perm = epoch_permutation(dataset_size, cfg.seed, state.epochs_done);
  const std::size_t batches =
      (dataset_size + cfg.batch_size - 1) / static_cast<std::size_t>(cfg.batch_size);

  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t begin = b * cfg.batch_size;
    const std::size_t end = std::min(begin + cfg.batch_size, dataset_size);
    const std::vector<std::size_t> indices(perm.begin() + begin, perm.begin() + end);
    std::vector<TrainItem> items = loader(indices, state.epochs_done, b);
    if (items.size() != indices.size()) {
      throw std::runtime_error("batch loader returned wrong item count");
    }
    std::vector<EmbeddingMap> embeddings;
    std::vector<std::vector<std::uint8_t>> labels;
    std::vector<std::string> ids;
    embeddings.reserve(items.size());
    for (TrainItem& item : items) {
      ids.push_back(item.id);
      labels.push_back(std::move(item.labels));
      embeddings.push_back(std::move(item.embedding));
    }

    const LossReport report = total_loss_and_grads(embeddings, labels, state.bank, loss_cfg);
    if (!std::isfinite(report.total)) {
      std::ostringstream msg;
      msg << "non-finite loss at step " << state.step + 1 << "; batch ids:";
      for (const auto& id : ids) {
        msg << ' ' << id;
      }
      throw std::runtime_error(msg.str());
    }

    state.step += 1;
    const double lr_p = lr_at(state.step, total_steps, cfg.lr_prototypes, cfg.warmup_ratio);
    const double lr_h = lr_at(state.step, total_steps, cfg.lr_head, cfg.warmup_ratio);
    apply_group(state.bank.prototypes, report.grad_prototypes, state.adam_prototypes, lr_p,
                cfg.weight_decay, cfg, state.step);
    apply_group(state.bank.head_weights, report.grad_weights, state.adam_weights, lr_h,
                cfg.weight_decay, cfg, state.step);
    apply_group(state.bank.head_bias, report.grad_bias, state.adam_bias, lr_h, 0.0, cfg,
                state.step);
    kernels::clamp_min(state.bank.head_weights.data(), 0.0, state.bank.head_weights.size());
    restore_prototype_norms(state.bank);

    if (log) {
      *log << "{\"step\":" << state.step << ",\"epoch\":" << state.epochs_done
           << ",\"lr_prototypes\":" << lr_p << ",\"lr_head\":" << lr_h
           << ",\"asym\":" << report.asym << ",\"ortho\":" << report.ortho
           << ",\"total\":" << report.total << ",\"grad_norm\":" << report.grad_norm()
           << "}\n";
    }
  }
  state.epochs_done += 1;
}

double validate(const TrainState& state, const std::vector<TrainItem>& items,
                const LossConfig& loss_cfg, int batch_size) {
  if (items.empty()) throw std::invalid_argument("validation set is empty");
  double asym_weighted = 0.0;
  std::size_t total = 0;
  double ortho_value = 0.0;
  for (std::size_t begin = 0; begin < items.size();
       begin += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(begin + batch_size, items.size());
    std::vector<EmbeddingMap> embeddings;
    std::vector<std::vector<std::uint8_t>> labels;
    for (std::size_t i = begin; i < end; ++i) {
      embeddings.push_back(items[i].embedding);
      labels.push_back(items[i].labels);
    }
    const LossReport report = total_loss_and_grads(embeddings, labels, state.bank, loss_cfg);
    asym_weighted += report.asym * static_cast<double>(end - begin);
    ortho_value = report.ortho;
    total += end - begin;
  }
  return asym_weighted / static_cast<double>(total) + loss_cfg.lambda_ortho * ortho_value;
}

TrainResult fit(TrainState state, const BatchLoader& loader, std::size_t train_size,
                const std::vector<TrainItem>& val_items, const TrainConfig& cfg,
                const LossConfig& loss_cfg, const std::string& run_dir,
                const nlohmann::json& checkpoint_metadata) {
  cfg.validate();
  loss_cfg.validate();
  if (train_size == 0) throw std::invalid_argument("dataset is empty");

  const std::size_t batches_per_epoch =
      (train_size + cfg.batch_size - 1) / static_cast<std::size_t>(cfg.batch_size);
  const long total_steps = static_cast<long>(batches_per_epoch) * cfg.epochs;

  std::ofstream log;
  if (!run_dir.empty()) {
    std::filesystem::create_directories(run_dir);
    log.open(run_dir + "/train_log.jsonl", state.step > 0 ? std::ios::app : std::ios::trunc);
  }

  TrainResult result;
  result.best_val_loss = state.best_val_loss;
  result.best_checkpoint_path = state.best_checkpoint_path;

  for (int epoch = state.epochs_done; epoch < cfg.epochs; ++epoch) {
    train_epoch(state, loader, train_size, cfg, loss_cfg, total_steps,
                log.is_open() ? &log : nullptr);
    const double val_loss = validate(state, val_items, loss_cfg, cfg.batch_size);
    if (log.is_open()) {
      log << "{\"epoch\":" << epoch << ",\"val_loss\":" << val_loss << "}\n";
      log.flush();
    }
    if (!state.has_best || val_loss < state.best_val_loss) {
      state.best_val_loss = val_loss;
      state.has_best = true;
      result.best_epoch = epoch;
      if (!run_dir.empty()) {
        state.best_checkpoint_path = run_dir + "/checkpoint_best.appb";
        nlohmann::json meta = checkpoint_metadata;
        meta["epoch"] = epoch;
        meta["val_loss"] = val_loss;
        meta["step"] = state.step;
        save_checkpoint(state.best_checkpoint_path, state.bank, meta);
      }
    }
    if (!run_dir.empty()) {
      save_train_state(run_dir + "/optimizer_state.apos", state);
    }
  }

  result.bank = state.bank;
  result.best_val_loss = state.best_val_loss;
  result.best_checkpoint_path = state.best_checkpoint_path;
  return result;
}

void save_train_state(const std::string& path, const TrainState& state) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write optimizer state: " + path);
  f.write(kSidecarMagic, 4);
  write_u32(f, kSidecarVersion);
  write_u32(f, static_cast<std::uint32_t>(state.bank.num_classes));
  write_u32(f, static_cast<std::uint32_t>(state.bank.per_class));
  write_u32(f, static_cast<std::uint32_t>(state.bank.dim));
  write_i64(f, state.step);
  write_i64(f, state.epochs_done);
  write_f64(f, state.best_val_loss);
  write_u32(f, state.has_best ? 1u : 0u);
  write_u32(f, static_cast<std::uint32_t>(state.best_checkpoint_path.size()));
  f.write(state.best_checkpoint_path.data(),
          static_cast<std::streamsize>(state.best_checkpoint_path.size()));
  write_f64_array(f, state.bank.prototypes);
  write_f64_array(f, state.bank.head_weights);
  write_f64_array(f, state.bank.head_bias);
  for (const AdamMoments* g : {&state.adam_prototypes, &state.adam_weights, &state.adam_bias}) {
    write_f64_array(f, g->m);
    write_f64_array(f, g->v);
  }
  write_u32(f, static_cast<std::uint32_t>(state.bank.class_names.size()));
  for (const auto& name : state.bank.class_names) {
    write_u32(f, static_cast<std::uint32_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  if (!f) throw std::runtime_error("short write: " + path);
}

TrainState load_train_state(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open optimizer state: " + path);
  char magic[4] = {};
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kSidecarMagic, 4) != 0) {
    throw std::runtime_error("bad magic: " + path);
  }
  if (read_pod<std::uint32_t>(f, "version") != kSidecarVersion) {
    throw std::runtime_error("unsupported optimizer state version");
  }
  PrototypeBank bank;
  bank.num_classes = static_cast<int>(read_pod<std::uint32_t>(f, "C"));
  bank.per_class = static_cast<int>(read_pod<std::uint32_t>(f, "J"));
  bank.dim = static_cast<int>(read_pod<std::uint32_t>(f, "D"));
  TrainState state;
  state.step = read_pod<std::int64_t>(f, "step");
  state.epochs_done = static_cast<int>(read_pod<std::int64_t>(f, "epochs_done"));
  state.best_val_loss = read_pod<double>(f, "best_val_loss");
  state.has_best = read_pod<std::uint32_t>(f, "has_best") != 0;
  const std::uint32_t path_len = read_pod<std::uint32_t>(f, "path length");
  state.best_checkpoint_path.assign(path_len, '\0');
  f.read(state.best_checkpoint_path.data(), path_len);
  bank.prototypes.resize(static_cast<std::size_t>(bank.num_classes) * bank.per_class * bank.dim);
  bank.head_weights.resize(static_cast<std::size_t>(bank.num_classes) * bank.per_class);
  bank.head_bias.resize(bank.num_classes);
  read_f64_array(f, bank.prototypes, "prototypes");
  read_f64_array(f, bank.head_weights, "head weights");
  read_f64_array(f, bank.head_bias, "head bias");
  state.bank = std::move(bank);
  state.adam_prototypes.m.resize(state.bank.prototypes.size());
  state.adam_prototypes.v.resize(state.bank.prototypes.size());
  state.adam_weights.m.resize(state.bank.head_weights.size());
  state.adam_weights.v.resize(state.bank.head_weights.size());
  state.adam_bias.m.resize(state.bank.head_bias.size());
  state.adam_bias.v.resize(state.bank.head_bias.size());
  for (AdamMoments* g : {&state.adam_prototypes, &state.adam_weights, &state.adam_bias}) {
    read_f64_array(f, g->m, "adam m");
    read_f64_array(f, g->v, "adam v");
  }
  const std::uint32_t n_names = read_pod<std::uint32_t>(f, "class name count");
  state.bank.class_names.resize(n_names);
  for (auto& name : state.bank.class_names) {
    const std::uint32_t len = read_pod<std::uint32_t>(f, "class name length");
    name.assign(len, '\0');
    f.read(name.data(), len);
    if (!f) throw std::runtime_error("truncated optimizer state: class name");
  }
  return state;
}

}  // namespace protosound

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

#include "protosound/protonet.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "protosound/kernels.hpp"
#include "protosound/rng.hpp"

namespace protosound {

namespace {

constexpr char kMagic[4] = {'A', 'P', 'P', 'B'};
constexpr std::uint32_t kVersion = 1;
constexpr double kMinPrototypeNorm = 1e-8;

void write_u32(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                        static_cast<unsigned char>((v >> 8) & 0xFF),
                        static_cast<unsigned char>((v >> 16) & 0xFF),
                        static_cast<unsigned char>((v >> 24) & 0xFF)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& f, const char* what) {
  unsigned char b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  if (!f) throw std::runtime_error(std::string("truncated checkpoint: ") + what);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f32_array(std::ofstream& f, const std::vector<double>& values) {
  for (double v : values) {
    const float fv = static_cast<float>(v);
    f.write(reinterpret_cast<const char*>(&fv), 4);
  }
}

void read_f32_array(std::ifstream& f, std::vector<double>& values, const char* what) {
  for (double& v : values) {
    float fv;
    f.read(reinterpret_cast<char*>(&fv), 4);
    if (!f) throw std::runtime_error(std::string("truncated checkpoint: ") + what);
    v = fv;
  }
}

}  // namespace

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void PrototypeBank::validate() const {
  if (num_classes < 1 || per_class < 1 || dim < 1) {
    throw std::invalid_argument("bank dimensions must be positive");
  }
  if (prototypes.size() != static_cast<std::size_t>(num_classes) * per_class * dim ||
      head_weights.size() != static_cast<std::size_t>(num_classes) * per_class ||
      head_bias.size() != static_cast<std::size_t>(num_classes)) {
    throw std::invalid_argument("bank array sizes inconsistent");
  }
  for (double w : head_weights) {
    if (w < 0.0) throw std::invalid_argument("head weights must be non-negative");
  }
  for (int c = 0; c < num_classes; ++c) {
    for (int j = 0; j < per_class; ++j) {
      const double norm_sq = kernels::sum_squares(prototype(c, j), dim);
      if (norm_sq < kMinPrototypeNorm * kMinPrototypeNorm) {
        throw std::invalid_argument("prototype norm below 1e-8");
      }
    }
  }
}

PrototypeBank init_bank(int num_classes, int per_class, int dim, std::uint64_t seed) {
  if (num_classes < 1 || per_class < 1 || dim < 1) {
    throw std::invalid_argument("bank dimensions must be positive");
  }
  PrototypeBank bank;
  bank.num_classes = num_classes;
  bank.per_class = per_class;
  bank.dim = dim;
  bank.prototypes.resize(static_cast<std::size_t>(num_classes) * per_class * dim);
  bank.head_weights.assign(static_cast<std::size_t>(num_classes) * per_class, 1.0);
  bank.head_bias.assign(num_classes, -2.0);
  Rng rng(seed);
  for (int c = 0; c < num_classes; ++c) {
    for (int j = 0; j < per_class; ++j) {
      double* p = bank.prototype(c, j);
      double norm_sq;
      do {
        for (int k = 0; k < dim; ++k) {
          p[k] = rng.normal();
        }
        norm_sq = kernels::sum_squares(p, dim);
      } while (norm_sq < 1e-12);
      kernels::scale_shift(p, 1.0 / std::sqrt(norm_sq), 0.0, p, dim);
    }
  }
  return bank;
}

SimilarityResult similarity(const EmbeddingMap& z, const PrototypeBank& bank) {
  if (z.d != bank.dim) throw std::invalid_argument("embedding/prototype dimension mismatch");
  const int cells = z.h * z.w;
  const int protos = bank.num_classes * bank.per_class;

  // Normalize embedding cells once; zero-norm cells stay zero so their
  // similarity to everything is 0.
  std::vector<double> unit_cells(z.values.size(), 0.0);
  for (int cell = 0; cell < cells; ++cell) {
    const double* src = z.values.data() + static_cast<std::size_t>(cell) * z.d;
    const double norm_sq = kernels::sum_squares(src, z.d);
    if (norm_sq > 0.0) {
      kernels::scale_shift(src, 1.0 / std::sqrt(norm_sq), 0.0,
                           unit_cells.data() + static_cast<std::size_t>(cell) * z.d, z.d);
    }
  }
  std::vector<double> unit_protos(bank.prototypes.size());
  for (int p = 0; p < protos; ++p) {
    const double* src = bank.prototypes.data() + static_cast<std::size_t>(p) * bank.dim;
    const double norm_sq = kernels::sum_squares(src, bank.dim);
    if (norm_sq < 1e-30) throw std::invalid_argument("zero-norm prototype");
    kernels::scale_shift(src, 1.0 / std::sqrt(norm_sq), 0.0,
                         unit_protos.data() + static_cast<std::size_t>(p) * bank.dim, bank.dim);
  }

  SimilarityResult result;
  result.num_classes = bank.num_classes;
  result.per_class = bank.per_class;
  result.h = z.h;
  result.w = z.w;
  result.maps.resize(static_cast<std::size_t>(protos) * cells);
  result.pooled.resize(protos);
  result.argmax.resize(protos);
  for (int p = 0; p < protos; ++p) {
    const double* proto = unit_protos.data() + static_cast<std::size_t>(p) * bank.dim;
    double* map = result.maps.data() + static_cast<std::size_t>(p) * cells;
    double best = -2.0;
    int best_cell = 0;
    for (int cell = 0; cell < cells; ++cell) {
      double s = kernels::dot(proto, unit_cells.data() + static_cast<std::size_t>(cell) * z.d,
                              bank.dim);
      // Cosine of unit vectors; clip rounding spill outside [-1, 1].
      if (s > 1.0) s = 1.0;
      if (s < -1.0) s = -1.0;
      map[cell] = s;
      if (s > best) {
        best = s;
        best_cell = cell;
      }
    }
    result.pooled[p] = best;
    result.argmax[p] = {best_cell / z.w, best_cell % z.w};
  }
  return result;
}

Prediction predict(const SimilarityResult& sim, const PrototypeBank& bank) {
  if (sim.num_classes != bank.num_classes || sim.per_class != bank.per_class) {
    throw std::invalid_argument("similarity/bank shape mismatch");
  }
  Prediction out;
  out.logits.resize(bank.num_classes);
  out.confidences.resize(bank.num_classes);
  for (int c = 0; c < bank.num_classes; ++c) {
    const std::size_t offset = static_cast<std::size_t>(c) * bank.per_class;
    double logit = kernels::dot(bank.head_weights.data() + offset, sim.pooled.data() + offset,
                                bank.per_class);
    logit += bank.head_bias[c];
    out.logits[c] = logit;
    out.confidences[c] = sigmoid(logit);
  }
  return out;
}

void save_checkpoint(const std::string& path, const PrototypeBank& bank,
                     const nlohmann::json& metadata) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
  f.write(kMagic, 4);
  write_u32(f, kVersion);
  write_u32(f, static_cast<std::uint32_t>(bank.num_classes));
  write_u32(f, static_cast<std::uint32_t>(bank.per_class));
  write_u32(f, static_cast<std::uint32_t>(bank.dim));
  write_f32_array(f, bank.prototypes);
  write_f32_array(f, bank.head_weights);
  write_f32_array(f, bank.head_bias);
  nlohmann::json trailer = metadata;
  trailer["class_names"] = bank.class_names;
  const std::string text = trailer.dump();
  write_u32(f, static_cast<std::uint32_t>(text.size()));
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw std::runtime_error("short write: " + path);
}

PrototypeBank load_checkpoint(const std::string& path, nlohmann::json* metadata) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4] = {};
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("bad magic: " + path);
  }
  const std::uint32_t version = read_u32(f, "version");
  if (version != kVersion) throw std::runtime_error("unsupported checkpoint version");
  PrototypeBank bank;
  bank.num_classes = static_cast<int>(read_u32(f, "C"));
  bank.per_class = static_cast<int>(read_u32(f, "J"));
  bank.dim = static_cast<int>(read_u32(f, "D"));
  if (bank.num_classes < 1 || bank.per_class < 1 || bank.dim < 1) {
    throw std::runtime_error("invalid checkpoint dimensions");
  }
  bank.prototypes.resize(static_cast<std::size_t>(bank.num_classes) * bank.per_class * bank.dim);
  bank.head_weights.resize(static_cast<std::size_t>(bank.num_classes) * bank.per_class);
  bank.head_bias.resize(bank.num_classes);
  read_f32_array(f, bank.prototypes, "prototypes");
  read_f32_array(f, bank.head_weights, "head weights");
  read_f32_array(f, bank.head_bias, "head bias");
  const std::uint32_t trailer_len = read_u32(f, "trailer length");
  std::string text(trailer_len, '\0');
  f.read(text.data(), trailer_len);
  if (!f) throw std::runtime_error("truncated checkpoint: trailer");
  const nlohmann::json trailer = nlohmann::json::parse(text);
  if (trailer.contains("class_names")) {
    bank.class_names = trailer["class_names"].get<std::vector<std::string>>();
  }
  if (metadata) *metadata = trailer;
  return bank;
}

}  // namespace protosound

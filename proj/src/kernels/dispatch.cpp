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

#include "protosound/kernels.hpp"

#include <cstdlib>
#include <stdexcept>

namespace protosound::kernels {

namespace {

struct Table {
  std::string name;
  double (*dot)(const double*, const double*, std::size_t);
  double (*sum_squares)(const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*scale_shift)(const double*, double, double, double*, std::size_t);
  void (*mul)(const double*, const double*, double*, std::size_t);
  void (*clamp_min)(double*, double, std::size_t);
  void (*adamw_update)(double*, const double*, double*, double*, std::size_t, const AdamStep&);
};

const Table kScalar = {
    "scalar",      scalar::dot, scalar::sum_squares, scalar::axpy,
    scalar::scale_shift, scalar::mul, scalar::clamp_min, scalar::adamw_update,
};

const Table kAvx2 = {
    "avx2",      avx2::dot, avx2::sum_squares, avx2::axpy,
    avx2::scale_shift, avx2::mul, avx2::clamp_min, avx2::adamw_update,
};

const Table* select_auto() {
  if (const char* env = std::getenv("PROTOSOUND_KERNELS")) {
    const std::string requested(env);
    if (requested == "scalar") return &kScalar;
    if (requested == "avx2" && avx2::supported()) return &kAvx2;
    if (requested == "avx2") {
      throw std::runtime_error("PROTOSOUND_KERNELS=avx2 but AVX2 is unavailable");
    }
  }
  return avx2::supported() ? &kAvx2 : &kScalar;
}

const Table*& active() {
  static const Table* table = select_auto();
  return table;
}

}  // namespace

const std::string& backend_name() { return active()->name; }

void force_backend(const std::string& name) {
  if (name == "scalar") {
    active() = &kScalar;
  } else if (name == "avx2") {
    if (!avx2::supported()) {
      throw std::runtime_error("AVX2 backend unavailable on this machine");
    }
    active() = &kAvx2;
  } else if (name == "auto") {
    active() = select_auto();
  } else {
    throw std::invalid_argument("unknown kernel backend: " + name);
  }
}

double dot(const double* a, const double* b, std::size_t n) { return active()->dot(a, b, n); }
double sum_squares(const double* a, std::size_t n) { return active()->sum_squares(a, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { active()->axpy(alpha, x, y, n); }
void scale_shift(const double* x, double scale, double shift, double* y, std::size_t n) {
  active()->scale_shift(x, scale, shift, y, n);
}
void mul(const double* a, const double* b, double* y, std::size_t n) { active()->mul(a, b, y, n); }
void clamp_min(double* x, double lo, std::size_t n) { active()->clamp_min(x, lo, n); }
void adamw_update(double* param, const double* grad, double* m, double* v,
                  std::size_t n, const AdamStep& s) {
  active()->adamw_update(param, grad, m, v, n, s);
}

}  // namespace protosound::kernels

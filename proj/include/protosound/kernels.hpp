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

#include <cstddef>
#include <string>

// Double-precision inner-loop kernels. Scalar reference implementations are
// always available; an AVX2+FMA variant is selected at runtime when the CPU
// supports it. The two backends are equivalence-tested against each other.
// PROTOSOUND_KERNELS=scalar|avx2 in the environment overrides the selection.

namespace protosound::kernels {

struct AdamStep {
  double lr = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled, scaled by lr
  double bias1 = 1.0;         // 1 - beta1^t
  double bias2 = 1.0;         // 1 - beta2^t
};

// Dispatched entry points.
double dot(const double* a, const double* b, std::size_t n);
double sum_squares(const double* a, std::size_t n);
// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);
// y = x * scale + shift (x and y may alias)
void scale_shift(const double* x, double scale, double shift, double* y, std::size_t n);
// y = a * b elementwise (may alias)
void mul(const double* a, const double* b, double* y, std::size_t n);
// x = max(x, lo)
void clamp_min(double* x, double lo, std::size_t n);
// Decoupled-weight-decay Adam update of param/m/v in place.
void adamw_update(double* param, const double* grad, double* m, double* v,
                  std::size_t n, const AdamStep& s);

// Active backend name ("scalar" or "avx2").
const std::string& backend_name();
// Force a backend for tests: "scalar", "avx2" or "auto". Throws if the
// requested backend is unavailable on this machine.
void force_backend(const std::string& name);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sum_squares(const double* a, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale_shift(const double* x, double scale, double shift, double* y, std::size_t n);
void mul(const double* a, const double* b, double* y, std::size_t n);
void clamp_min(double* x, double lo, std::size_t n);
void adamw_update(double* param, const double* grad, double* m, double* v,
                  std::size_t n, const AdamStep& s);
}  // namespace scalar

namespace avx2 {
// False on non-x86 builds or CPUs without AVX2/FMA.
bool supported();
double dot(const double* a, const double* b, std::size_t n);
double sum_squares(const double* a, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale_shift(const double* x, double scale, double shift, double* y, std::size_t n);
void mul(const double* a, const double* b, double* y, std::size_t n);
void clamp_min(double* x, double lo, std::size_t n);
void adamw_update(double* param, const double* grad, double* m, double* v,
                  std::size_t n, const AdamStep& s);
}  // namespace avx2

}  // namespace protosound::kernels

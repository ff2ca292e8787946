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

#include <cmath>

#if defined(__x86_64__) || defined(_M_X64) || defined(__i386__) || defined(_M_IX86)
#define PROTOSOUND_X86 1
#include <immintrin.h>
#else
#define PROTOSOUND_X86 0
#endif

namespace protosound::kernels::avx2 {

#if PROTOSOUND_X86

bool supported() {
#if defined(__GNUC__) || defined(__clang__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    acc += a[i] * b[i];
  }
  return acc;
}

double sum_squares(const double* a, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d x0 = _mm256_loadu_pd(a + i);
    const __m256d x1 = _mm256_loadu_pd(a + i + 4);
    acc0 = _mm256_fmadd_pd(x0, x0, acc0);
    acc1 = _mm256_fmadd_pd(x1, x1, acc1);
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_loadu_pd(a + i);
    acc0 = _mm256_fmadd_pd(x, x, acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    acc += a[i] * a[i];
  }
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, r);
  }
  for (; i < n; ++i) {
    y[i] += alpha * x[i];
  }
}

void scale_shift(const double* x, double scale, double shift, double* y, std::size_t n) {
  // mul + add (not FMA) so the result is bit-identical to the scalar kernel.
  const __m256d sv = _mm256_set1_pd(scale);
  const __m256d bv = _mm256_set1_pd(shift);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_add_pd(_mm256_mul_pd(_mm256_loadu_pd(x + i), sv), bv);
    _mm256_storeu_pd(y + i, r);
  }
  for (; i < n; ++i) {
    y[i] = x[i] * scale + shift;
  }
}

void mul(const double* a, const double* b, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) {
    y[i] = a[i] * b[i];
  }
}

void clamp_min(double* x, double lo, std::size_t n) {
  const __m256d lv = _mm256_set1_pd(lo);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_max_pd(_mm256_loadu_pd(x + i), lv));
  }
  for (; i < n; ++i) {
    if (x[i] < lo) x[i] = lo;
  }
}

void adamw_update(double* param, const double* grad, double* m, double* v,
                  std::size_t n, const AdamStep& s) {
  const __m256d b1 = _mm256_set1_pd(s.beta1);
  const __m256d b2 = _mm256_set1_pd(s.beta2);
  const __m256d one_m_b1 = _mm256_set1_pd(1.0 - s.beta1);
  const __m256d one_m_b2 = _mm256_set1_pd(1.0 - s.beta2);
  const __m256d inv_bias1 = _mm256_set1_pd(1.0 / s.bias1);
  const __m256d inv_bias2 = _mm256_set1_pd(1.0 / s.bias2);
  const __m256d eps = _mm256_set1_pd(s.eps);
  const __m256d lr = _mm256_set1_pd(s.lr);
  const __m256d wd = _mm256_set1_pd(s.weight_decay);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    __m256d mi = _mm256_loadu_pd(m + i);
    __m256d vi = _mm256_loadu_pd(v + i);
    mi = _mm256_fmadd_pd(b1, mi, _mm256_mul_pd(one_m_b1, g));
    vi = _mm256_fmadd_pd(b2, vi, _mm256_mul_pd(one_m_b2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d m_hat = _mm256_mul_pd(mi, inv_bias1);
    const __m256d v_hat = _mm256_mul_pd(vi, inv_bias2);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps);
    __m256d p = _mm256_loadu_pd(param + i);
    const __m256d step = _mm256_fmadd_pd(wd, p, _mm256_div_pd(m_hat, denom));
    p = _mm256_fnmadd_pd(lr, step, p);
    _mm256_storeu_pd(param + i, p);
  }
  for (; i < n; ++i) {
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * grad[i];
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * grad[i] * grad[i];
    const double m_hat = m[i] / s.bias1;
    const double v_hat = v[i] / s.bias2;
    param[i] -= s.lr * (m_hat / (std::sqrt(v_hat) + s.eps) + s.weight_decay * param[i]);
  }
}

#else  // !PROTOSOUND_X86

bool supported() { return false; }

double dot(const double* a, const double* b, std::size_t n) { return scalar::dot(a, b, n); }
double sum_squares(const double* a, std::size_t n) { return scalar::sum_squares(a, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { scalar::axpy(alpha, x, y, n); }
void scale_shift(const double* x, double scale, double shift, double* y, std::size_t n) {
  scalar::scale_shift(x, scale, shift, y, n);
}
void mul(const double* a, const double* b, double* y, std::size_t n) { scalar::mul(a, b, y, n); }
void clamp_min(double* x, double lo, std::size_t n) { scalar::clamp_min(x, lo, n); }
void adamw_update(double* param, const double* grad, double* m, double* v,
                  std::size_t n, const AdamStep& s) {
  scalar::adamw_update(param, grad, m, v, n, s);
}

#endif  // PROTOSOUND_X86

}  // namespace protosound::kernels::avx2

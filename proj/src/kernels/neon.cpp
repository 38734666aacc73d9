// Copyright 2026 The dpclip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include <arm_neon.h>

#include "dpclip/kernels.hpp"

namespace dpclip::kernels {
namespace {

inline void row_fma(double av, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(av);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    float64x2_t y0 = vld1q_f64(y + j);
    float64x2_t y1 = vld1q_f64(y + j + 2);
    y0 = vfmaq_f64(y0, va, vld1q_f64(x + j));
    y1 = vfmaq_f64(y1, va, vld1q_f64(x + j + 2));
    vst1q_f64(y + j, y0);
    vst1q_f64(y + j + 2, y1);
  }
  for (; j < n; ++j) y[j] += av * x[j];
}

double dot(const double* x, const double* y, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
             const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * ldc;
    if (!accumulate) {
      for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
    }
    const double* arow = a + i * lda;
    for (std::size_t p = 0; p < k; ++p) row_fma(arow[p], b + p * ldb, crow, n);
  }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
             const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  if (!accumulate) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) c[i * ldc + j] = 0.0;
  }
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a + p * lda;
    const double* brow = b + p * ldb;
    for (std::size_t i = 0; i < m; ++i) row_fma(arow[i], brow, c + i * ldc, n);
  }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
             const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = dot(a + i * lda, b + j * ldb, k);
      c[i * ldc + j] = accumulate ? c[i * ldc + j] + v : v;
    }
  }
}

void axpy(double alpha, const double* x, double* y, std::size_t n) { row_fma(alpha, x, y, n); }

}  // namespace

const KernelTable& neon() {
  static const KernelTable table{"neon", gemm_nn, gemm_tn, gemm_nt, dot, axpy};
  return table;
}

}  // namespace dpclip::kernels

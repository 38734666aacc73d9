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

#include <immintrin.h>

#include "dpclip/kernels.hpp"

namespace dpclip::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// y[0..n) += a * x[0..n)
inline void row_fma(double av, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(av);
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    __m256d y0 = _mm256_loadu_pd(y + j);
    __m256d y1 = _mm256_loadu_pd(y + j + 4);
    y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + j), y0);
    y1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + j + 4), y1);
    _mm256_storeu_pd(y + j, y0);
    _mm256_storeu_pd(y + j + 4, y1);
  }
  for (; j + 4 <= n; j += 4) {
    _mm256_storeu_pd(y + j, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + j), _mm256_loadu_pd(y + j)));
  }
  for (; j < n; ++j) y[j] += av * x[j];
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
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

const KernelTable& avx2() {
  static const KernelTable table{"avx2", gemm_nn, gemm_tn, gemm_nt, dot, axpy};
  return table;
}

}  // namespace dpclip::kernels

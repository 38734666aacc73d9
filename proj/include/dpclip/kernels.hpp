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

#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace dpclip::kernels {

// Raw arithmetic inner loops. Every variant computes the same function; the
// scalar one is the reference, SIMD ones may differ in rounding only.
// These do not touch the counters; the tensor layer counts on their behalf.

/// C[m×n] (+)= A[m×k] · B[k×n], all row-major with leading dimensions.
using GemmNN = void (*)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                        std::size_t lda, const double* b, std::size_t ldb, double* c,
                        std::size_t ldc, bool accumulate);
/// C[m×n] (+)= Aᵀ · B where A is stored k×m and B is k×n.
using GemmTN = GemmNN;
/// C[m×n] (+)= A · Bᵀ where A is stored m×k and B is n×k.
using GemmNT = GemmNN;
using Dot = double (*)(const double* x, const double* y, std::size_t n);
/// y += alpha · x
using Axpy = void (*)(double alpha, const double* x, double* y, std::size_t n);

struct KernelTable {
  std::string_view name;
  GemmNN gemm_nn;
  GemmTN gemm_tn;
  GemmNT gemm_nt;
  Dot dot;
  Axpy axpy;
};

const KernelTable& scalar();
#if defined(DPCLIP_HAVE_AVX2)
const KernelTable& avx2();
#endif
#if defined(DPCLIP_HAVE_NEON)
const KernelTable& neon();
#endif

/// Variants compiled in and supported by the running CPU, scalar first.
std::vector<const KernelTable*> available();

/// Table used by the tensor layer. Chosen once on first use: the best
/// available variant, overridable with DPCLIP_KERNELS=scalar|avx2|neon.
const KernelTable& active();

/// Forces a variant by name; returns false if it is unavailable.
bool select(std::string_view name);

}  // namespace dpclip::kernels

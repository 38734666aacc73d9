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

#include <gtest/gtest.h>

#include <cmath>

#include "dpclip/kernels.hpp"
#include "dpclip/rng.hpp"

namespace dpclip {
namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.gaussian();
  return v;
}

double rel(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0, scale = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(a[i]));
  }
  return scale == 0 ? diff : diff / scale;
}

TEST(Kernels, ScalarIsAlwaysAvailable) {
  const auto all = kernels::available();
  ASSERT_FALSE(all.empty());
  EXPECT_EQ(all.front()->name, "scalar");
  EXPECT_TRUE(kernels::select("scalar"));
  EXPECT_EQ(kernels::active().name, "scalar");
  EXPECT_FALSE(kernels::select("no-such-variant"));
  EXPECT_TRUE(kernels::select(all.back()->name));
}

// Every compiled variant against the scalar reference, over odd sizes that
// exercise vector tails and strided (padded) leading dimensions.
TEST(Kernels, VariantsMatchScalar) {
  const kernels::KernelTable& ref = kernels::scalar();
  Rng rng(11);
  for (const kernels::KernelTable* k : kernels::available()) {
    SCOPED_TRACE(std::string(k->name));
    for (int trial = 0; trial < 60; ++trial) {
      const std::size_t m = 1 + rng.below(13), n = 1 + rng.below(13), kk = 1 + rng.below(13);
      const std::size_t pad = rng.below(3);
      const bool acc = rng.below(2) == 1;
      const auto a = random_vec(rng, (m + pad) * (kk + pad) * 2);
      const auto b = random_vec(rng, (kk + pad) * (n + pad) * 2);
      const auto c0 = random_vec(rng, m * (n + pad));

      auto c_ref = c0, c_var = c0;
      ref.gemm_nn(m, n, kk, a.data(), kk + pad, b.data(), n + pad, c_ref.data(), n + pad, acc);
      k->gemm_nn(m, n, kk, a.data(), kk + pad, b.data(), n + pad, c_var.data(), n + pad, acc);
      EXPECT_LE(rel(c_ref, c_var), 1e-13);

      c_ref = c0;
      c_var = c0;
      ref.gemm_tn(m, n, kk, a.data(), m + pad, b.data(), n + pad, c_ref.data(), n + pad, acc);
      k->gemm_tn(m, n, kk, a.data(), m + pad, b.data(), n + pad, c_var.data(), n + pad, acc);
      EXPECT_LE(rel(c_ref, c_var), 1e-13);

      c_ref = c0;
      c_var = c0;
      ref.gemm_nt(m, n, kk, a.data(), kk + pad, b.data(), kk + pad, c_ref.data(), n + pad, acc);
      k->gemm_nt(m, n, kk, a.data(), kk + pad, b.data(), kk + pad, c_var.data(), n + pad, acc);
      EXPECT_LE(rel(c_ref, c_var), 1e-13);

      const std::size_t len = 1 + rng.below(40);
      const auto x = random_vec(rng, len), y = random_vec(rng, len);
      const double d_ref = ref.dot(x.data(), y.data(), len);
      EXPECT_NEAR(k->dot(x.data(), y.data(), len), d_ref, 1e-13 * (1 + std::abs(d_ref)) * len);

      auto y_ref = y, y_var = y;
      ref.axpy(0.37, x.data(), y_ref.data(), len);
      k->axpy(0.37, x.data(), y_var.data(), len);
      EXPECT_LE(rel(y_ref, y_var), 1e-14);
    }
  }
}

TEST(Kernels, ScalarGemmKnownValues) {
  const double a[] = {1, 2, 3, 4, 5, 6};  // 2×3
  const double b[] = {7, 8, 9, 10, 11, 12};  // 3×2
  double c[4] = {1, 1, 1, 1};
  kernels::scalar().gemm_nn(2, 2, 3, a, 3, b, 2, c, 2, false);
  EXPECT_EQ(c[0], 58);
  EXPECT_EQ(c[1], 64);
  EXPECT_EQ(c[2], 139);
  EXPECT_EQ(c[3], 154);
  kernels::scalar().gemm_nn(2, 2, 3, a, 3, b, 2, c, 2, true);
  EXPECT_EQ(c[3], 308);
}

}  // namespace
}  // namespace dpclip

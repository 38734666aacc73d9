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

#include "dpclip/counters.hpp"
#include "dpclip/errors.hpp"
#include "dpclip/rng.hpp"
#include "dpclip/tensor.hpp"

namespace dpclip {
namespace {

TEST(Tensor, MatmulIdentity) {
  const Tensor id({2, 2}, {1, 0, 0, 1});
  const Tensor b({2, 2}, {5, 6, 7, 8});
  const Tensor c = matmul(id, b);
  EXPECT_EQ(c.shape(), (Shape{2, 2}));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(c[i], b[i]);
}

TEST(Tensor, MatmulDotProduct) {
  const Tensor c = matmul(Tensor({1, 2}, {1, 2}), Tensor({2, 1}, {3, 4}));
  EXPECT_EQ(c.shape(), (Shape{1, 1}));
  EXPECT_EQ(c[0], 11.0);
}

TEST(Tensor, MatmulCountsTwoMnr) {
  Rng rng(1);
  const Tensor a = gaussian(rng, {2, 2});
  const Tensor b = gaussian(rng, {2, 2});
  counters::Scope s;
  const Tensor c = matmul(a, b);
  EXPECT_EQ(s.mul_adds(), 16u);
  EXPECT_EQ(s.live_delta(), 4);

  const Tensor x = gaussian(rng, {3, 5});
  const Tensor y = gaussian(rng, {5, 7});
  counters::Scope s2;
  const Tensor z = matmul(x, y);
  EXPECT_EQ(s2.mul_adds(), 2u * 3 * 5 * 7);
}

TEST(Tensor, MatmulShapeMismatch) {
  EXPECT_THROW(matmul(Tensor({2, 3}), Tensor({2, 3})), ShapeError);
}

TEST(Tensor, ZeroDimensionRejected) {
  EXPECT_THROW(Tensor(Shape{0}), ShapeError);
  EXPECT_THROW(Tensor(Shape{3, 0}), ShapeError);
  Rng rng(0);
  EXPECT_THROW(gaussian(rng, {0}), ShapeError);
}

TEST(Tensor, MatmulAssociativity) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 1 + rng.below(6), n = 1 + rng.below(6), r = 1 + rng.below(6), q = 1 + rng.below(6);
    const Tensor a = gaussian(rng, {m, n});
    const Tensor b = gaussian(rng, {n, r});
    const Tensor c = gaussian(rng, {r, q});
    const Tensor left = matmul(matmul(a, b), c);
    const Tensor right = matmul(a, matmul(b, c));
    const double scale = std::sqrt(std::max(squared_norm(left), squared_norm(right)));
    EXPECT_LE(max_abs_diff(left, right), 1e-9 * std::max(scale, 1.0));
  }
}

TEST(Tensor, TransposeOfProduct) {
  Rng rng(3);
  const Tensor a = gaussian(rng, {4, 3});
  const Tensor b = gaussian(rng, {3, 5});
  EXPECT_LE(max_abs_diff(transpose(matmul(a, b)), matmul(transpose(b), transpose(a))), 1e-12);
  EXPECT_LE(max_abs_diff(matmul_tn(transpose(a), b), matmul(a, b)), 1e-12);
  EXPECT_LE(max_abs_diff(matmul_nt(a, transpose(b)), matmul(a, b)), 1e-12);
}

TEST(Tensor, ElementwiseCounts) {
  const Tensor a({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor b({2, 3}, {6, 5, 4, 3, 2, 1});
  counters::Scope s;
  const Tensor c = add(a, b);
  EXPECT_EQ(s.mul_adds(), 6u);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(c[i], 7.0);
  const Tensor h = hadamard(a, b);
  EXPECT_EQ(h[0], 6.0);
  EXPECT_EQ(s.mul_adds(), 12u);
  EXPECT_DOUBLE_EQ(squared_norm(a), 91.0);
  EXPECT_EQ(s.mul_adds(), 12u + 11u);
  EXPECT_DOUBLE_EQ(dot(a.values(), b.values()), 56.0);
  EXPECT_EQ(s.mul_adds(), 12u + 11u + 11u);
}

TEST(Tensor, SumAxis) {
  const Tensor a({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor rows = sum_axis(a, 0);
  EXPECT_EQ(rows.shape(), (Shape{3}));
  EXPECT_EQ(rows[0], 5.0);
  EXPECT_EQ(rows[2], 9.0);
  const Tensor cols = sum_axis(a, 1);
  EXPECT_EQ(cols.shape(), (Shape{2}));
  EXPECT_EQ(cols[1], 15.0);
}

TEST(Counters, ReleaseRestoresLive) {
  const auto before = counters::snapshot().live_floats;
  {
    Tensor t({10, 10});
    EXPECT_EQ(counters::snapshot().live_floats, before + 100);
    t.release();
    EXPECT_EQ(counters::snapshot().live_floats, before);
  }
  EXPECT_EQ(counters::snapshot().live_floats, before);
}

TEST(Counters, PeakAtLeastLive) {
  counters::reset();
  const auto base = counters::snapshot();
  EXPECT_EQ(base.peak_floats, base.live_floats);
  EXPECT_EQ(base.mul_adds, 0u);
  { Tensor t({1000}); }
  const auto after = counters::snapshot();
  EXPECT_GE(after.peak_floats, base.live_floats + 1000);
  EXPECT_GE(after.peak_floats, after.live_floats);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  const Tensor x = gaussian(a, {3, 4});
  const Tensor y = gaussian(b, {3, 4});
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i], y[i]);
  EXPECT_NE(derive_seed(42, 1), derive_seed(42, 2));
}

TEST(Rng, GaussianMoments) {
  Rng rng(0);
  const Tensor g = gaussian(rng, {100000});
  double mean = 0;
  for (double v : g.values()) mean += v;
  mean /= 100000.0;
  double var = 0;
  for (double v : g.values()) var += (v - mean) * (v - mean);
  var /= 99999.0;
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_GE(var, 0.95);
  EXPECT_LE(var, 1.05);
}

TEST(Rng, BelowIsInRange) {
  Rng rng(5);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) ++hits[rng.below(7)];
  for (int h : hits) EXPECT_GT(h, 800);
}

}  // namespace
}  // namespace dpclip

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

#include "dpclip/dp.hpp"
#include "dpclip/errors.hpp"
#include "dpclip/verify.hpp"

namespace dpclip::dp {
namespace {

ParamSet single(std::initializer_list<double> w) {
  ParamSet p;
  p.layers.push_back({Tensor({w.size(), 1}, std::vector<double>(w)), Tensor()});
  return p;
}

TEST(Privatize, SigmaZeroIsIdentity) {
  Rng rng(1);
  const ParamSet g = single({1.5, -2.0, 3.25});
  EXPECT_TRUE(bit_equal(privatize(g, 0.0, 1.0, rng), g));
}

TEST(Privatize, NoiseVariance) {
  const verify::CheckResult r = verify::noise_variance(0, 10000);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Privatize, RejectsNonFinite) {
  Rng rng(1);
  EXPECT_THROW(privatize(single({1.0, std::nan("")}), 1.0, 1.0, rng), NumericError);
  EXPECT_THROW(privatize(single({1.0}), -1.0, 1.0, rng), NumericError);
}

TEST(Privatize, SameSeedSameNoise) {
  Rng a(9), b(9);
  const ParamSet g = single({0, 0, 0, 0});
  EXPECT_TRUE(bit_equal(privatize(g, 1.0, 2.0, a), privatize(g, 1.0, 2.0, b)));
}

TEST(Sgd, Step) {
  ParamSet p = single({1.0, 2.0});
  Sgd opt(0.5);
  opt.step(p, single({2.0, -2.0}));
  EXPECT_EQ(p.layers[0].weight[0], 0.0);
  EXPECT_EQ(p.layers[0].weight[1], 3.0);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // With bias correction the first update is lr · g/|g| up to eps.
  ParamSet p = single({1.0, 1.0});
  Adam opt(0.1);
  opt.step(p, single({4.0, -0.5}));
  EXPECT_NEAR(p.layers[0].weight[0], 0.9, 1e-7);
  EXPECT_NEAR(p.layers[0].weight[1], 1.1, 1e-7);
  EXPECT_EQ(opt.steps(), 1u);
}

TEST(Accumulator, RealStepOnEmptyThrows) {
  GradientAccumulator acc;
  ParamSet p = single({1.0});
  Rng rng(0);
  Sgd opt(1.0);
  EXPECT_THROW(acc.real_step(nullptr, 0, p, {}, rng, opt), StateError);
}

TEST(Accumulator, SumsThenApplies) {
  GradientAccumulator acc;
  acc.virtual_step(single({1.0, 2.0}), 2);
  acc.virtual_step(single({3.0, 4.0}), 3);
  EXPECT_EQ(acc.virtual_steps(), 2u);
  EXPECT_EQ(acc.samples(), 5u);
  ParamSet p = single({0.0, 0.0});
  Rng rng(0);
  Sgd opt(1.0);
  const ParamSet last = single({5.0, 4.0});
  acc.real_step(&last, 5, p, {}, rng, opt, Reduction::Mean);
  EXPECT_DOUBLE_EQ(p.layers[0].weight[0], -0.9);
  EXPECT_DOUBLE_EQ(p.layers[0].weight[1], -1.0);
  EXPECT_TRUE(acc.empty());
  EXPECT_EQ(acc.samples(), 0u);
}

TEST(Accumulator, SumReductionAndNoiseOncePerStep) {
  GradientAccumulator acc;
  acc.virtual_step(single({1.0}), 1);
  ParamSet p = single({0.0});
  Rng rng(3), twin(3);
  Sgd opt(1.0);
  PrivacyParams priv;
  priv.sigma = 2.0;
  priv.clip.R = 0.5;
  const ParamSet last = single({1.0});
  acc.real_step(&last, 1, p, priv, rng, opt);
  EXPECT_DOUBLE_EQ(p.layers[0].weight[0], -(2.0 + 1.0 * twin.gaussian()));
}

TEST(Accumulator, ChunkInvariance) {
  const ArchSpec a = ArchBuilder({6, 6, 2}).conv(4, {3, 3}).relu().flatten().linear(3).build();
  const verify::CheckResult r = verify::chunk_invariance(a, 0, 1e-9);
  EXPECT_TRUE(r.pass) << r.detail;
}

}  // namespace
}  // namespace dpclip::dp

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

#include "dpclip/arch_io.hpp"
#include "dpclip/costmodel.hpp"
#include "dpclip/counters.hpp"
#include "dpclip/reference.hpp"
#include "dpclip/verify.hpp"

namespace dpclip::cost {
namespace {

const std::string kData = DPCLIP_DATA_DIR;

TEST(FormatSig, Rounding) {
  EXPECT_EQ(format_sig(5035261952), "5.0e9");
  EXPECT_EQ(format_sig(1728), "1.7e3");
  EXPECT_EQ(format_sig(2), "2");
  EXPECT_EQ(format_sig(99), "99");
  EXPECT_EQ(format_sig(995), "1.0e3");
  EXPECT_EQ(format_sig(1150), "1.2e3");
  EXPECT_EQ(format_sig(123456, 3), "1.23e5");
  EXPECT_EQ(to_string(Count{1} << 100), "1267650600228229401496703205376");
}

TEST(LayerCosts, VggConv1) {
  const LayerCost c = layer_costs({"conv1", 50176, 27, 64}, 1);
  EXPECT_EQ(c.forward_time, Count{173408256});
  EXPECT_EQ(c.ghost_norm_space, Count{5035261953});
  EXPECT_EQ(format_sig(c.ghost_norm_space), "5.0e9");
}

TEST(LayerCosts, Formulas) {
  const Count B = 3, T = 5, D = 7, p = 11;
  const LayerCost c = layer_costs({"x", T, D, p}, B);
  EXPECT_EQ(c.forward_time, 2 * B * T * p * D);
  EXPECT_EQ(c.backprop_time, 2 * B * T * D * (2 * p + 1));
  EXPECT_EQ(c.ghost_norm_time, 2 * B * T * T * (D + p + 1) - B);
  EXPECT_EQ(c.instantiate_time, 2 * B * (T + 1) * p * D);
  EXPECT_EQ(c.weighted_grad_time, 2 * B * p * D);
  EXPECT_EQ(c.backprop_space, B * T * p + 2 * B * T * D + p * D);
  EXPECT_EQ(c.ghost_norm_space, B * (2 * T * T + 1));
  EXPECT_EQ(c.instantiate_space, B * (p * D + 1));
  EXPECT_EQ(c.weighted_grad_space, 0);
}

TEST(LayerCosts, LinearGhostSpaceIsThree) {
  EXPECT_EQ(layer_costs({"fc", 1, 4096, 1000}, 1).ghost_norm_space, 3);
}

TEST(LayerCosts, NoOverflowAtScale) {
  const LayerCost c = layer_costs({"big", 1000000, 4608, 512}, 4096);
  EXPECT_EQ(c.ghost_norm_time, Count{2} * 4096 * 1000000 * 1000000 * (4608 + 512 + 1) - 4096);
  EXPECT_GT(c.ghost_norm_time, Count{1} << 64);
}

TEST(AlgoCosts, LeadingTermsSingleLayer) {
  const ArchSpec a = ArchBuilder({10, 10, 3}).conv(16, {3, 3}).flatten().linear(2).build();
  const Count B = 4, T = 64, D = 27, p = 16;
  const Count tpd = B * T * p * D;
  EXPECT_EQ(algo_costs(a, B, Algorithm::NonDP).layers[0].leading_time, 6 * tpd);
  EXPECT_EQ(algo_costs(a, B, Algorithm::Opacus).layers[0].leading_time, 8 * tpd);
  EXPECT_EQ(algo_costs(a, B, Algorithm::FastGradClip).layers[0].leading_time, 10 * tpd);
  EXPECT_EQ(algo_costs(a, B, Algorithm::Ghost).layers[0].leading_time, 10 * tpd + 2 * B * T * T * (p + D));
  // 2T² = 8192 > pD = 432: mixed instantiates this layer.
  const AlgoLayerCost m = algo_costs(a, B, Algorithm::Mixed).layers[0];
  EXPECT_EQ(m.leading_space, B * (std::min(2 * T * T, p * D) + T * p + 2 * T * D));
}

TEST(AlgoCosts, ComposedFromModules) {
  const ArchSpec a = ArchBuilder({10, 10, 3}).conv(16, {3, 3}).flatten().linear(2).build();
  const LayerCost c = layer_costs(layer_dims(a)[0], 2);
  EXPECT_EQ(algo_costs(a, 2, Algorithm::NonDP).layers[0].time, c.forward_time + c.backprop_time);
  EXPECT_EQ(algo_costs(a, 2, Algorithm::Opacus).layers[0].time,
            c.forward_time + c.backprop_time + c.instantiate_time + c.weighted_grad_time);
  EXPECT_EQ(algo_costs(a, 2, Algorithm::Ghost).layers[0].time,
            c.forward_time + 2 * c.backprop_time + c.ghost_norm_time);
}

TEST(DecisionTable, VggStructure) {
  const ArchSpec vgg = load_arch(kData + "/arch/vgg11_224.json");
  const DecisionTable t = decision_table(vgg, clip::Priority::Memory);
  ASSERT_EQ(t.rows.size(), 11u);
  EXPECT_EQ(t.rows[0].ghost, Count{5035261952});
  EXPECT_EQ(t.rows[0].instantiate, 1728);
  EXPECT_EQ(t.rows[4].ghost, 1229312);
  EXPECT_EQ(t.rows[4].instantiate, 1179648);
  EXPECT_EQ(t.rows[4].decision, clip::Decision::Instantiate);
  EXPECT_EQ(t.rows[10].ghost, 2);
  EXPECT_EQ(t.rows[10].instantiate, 4096000);
  EXPECT_EQ(format_sig(t.instantiate_total), "1.3e8");
  const char* want[] = {"instantiate", "instantiate", "instantiate", "instantiate", "instantiate", "ghost",
                        "ghost",       "ghost",       "ghost",       "ghost",       "ghost"};
  for (std::size_t k = 0; k < 11; ++k) EXPECT_EQ(clip::to_string(t.rows[k].decision), want[k]) << k;
}

TEST(DecisionTable, MixedNeverWorse) {
  Rng rng(1);
  for (int i = 0; i < 30; ++i) {
    const ArchSpec a = reference::random_arch(rng);
    for (clip::Priority pr : {clip::Priority::Memory, clip::Priority::Speed}) {
      const DecisionTable t = decision_table(a, pr);
      EXPECT_LE(t.mixed_total, t.ghost_total);
      EXPECT_LE(t.mixed_total, t.instantiate_total);
    }
    EXPECT_TRUE(verify::decision_agreement(a).pass);
  }
}

TEST(DecisionTable, SingleLinearAlwaysGhost) {
  const ArchSpec a = ArchBuilder({2}).linear(2).build();
  EXPECT_EQ(decision_table(a, clip::Priority::Memory).rows[0].decision, clip::Decision::GhostNorm);
}

TEST(Measurement, FlopModelExact) {
  const verify::CheckResult r = verify::flop_model(0, 50);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Measurement, NetworkForwardMatchesPrediction) {
  // Conv/linear matmuls of a bias-free network count exactly Σ 2BTpD.
  const ArchSpec a = ArchBuilder({7, 7, 2})
                         .conv(4, {3, 3}, {1, 1}, {1, 1}, {1, 1}, false)
                         .conv(3, {2, 2}, {2, 2}, {0, 0}, {1, 1}, false)
                         .flatten()
                         .linear(2, false)
                         .build();
  Rng rng(2);
  const ParamSet p = init_params(a, rng);
  const Batch b = reference::random_batch(a, 3, rng);
  Count predicted = 0;
  for (const LayerDims& d : layer_dims(a)) predicted += layer_costs(d, 3).forward_time;
  counters::Scope s;
  BatchCache c = forward(a, p, b);
  EXPECT_EQ(static_cast<Count>(s.mul_adds()), predicted);
}

TEST(Measurement, MemoryOrdering) {
  verify::MemoryOrderingStats st;
  const verify::CheckResult r = verify::memory_ordering(0, 120, &st);
  EXPECT_TRUE(r.pass) << r.detail;
  EXPECT_EQ(st.exact_matches, st.configs);
}

}  // namespace
}  // namespace dpclip::cost

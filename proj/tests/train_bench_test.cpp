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
#include "dpclip/bench.hpp"
#include "dpclip/costmodel.hpp"
#include "dpclip/data.hpp"
#include "dpclip/errors.hpp"
#include "dpclip/train.hpp"

namespace dpclip {
namespace {

const std::string kData = DPCLIP_DATA_DIR;

ArchSpec small_net() { return ArchBuilder({6, 6, 1}).conv(4, {3, 3}).relu().flatten().linear(3).build(); }

TEST(Train, SameSeedIsBitReproducible) {
  const ArchSpec a = small_net();
  const Batch data = data::synthetic_blobs(a.input, 3, 60, 1);
  TrainConfig cfg;
  cfg.sigma = 0.5;
  cfg.clip.fn.R = 0.5;
  cfg.logical_batch = 20;
  cfg.physical_batch = 7;
  cfg.epochs = 3;
  cfg.seed = 11;
  const TrainResult r1 = train(a, data, cfg);
  const TrainResult r2 = train(a, data, cfg);
  EXPECT_TRUE(bit_equal(r1.params, r2.params));
  ASSERT_EQ(r1.epochs.size(), 3u);
  for (std::size_t e = 0; e < 3; ++e) {
    EXPECT_EQ(r1.epochs[e].train_loss, r2.epochs[e].train_loss);
    EXPECT_EQ(r1.epochs[e].steps, 3u);
  }
  cfg.seed = 12;
  EXPECT_FALSE(bit_equal(train(a, data, cfg).params, r1.params));
}

TEST(Train, PartialLogicalBatchStillSteps) {
  const ArchSpec a = small_net();
  const Batch data = data::synthetic_blobs(a.input, 3, 25, 1);
  TrainConfig cfg;
  cfg.logical_batch = 10;
  cfg.physical_batch = 4;
  EXPECT_EQ(train(a, data, cfg).epochs[0].steps, 3u);
}

TEST(Train, RejectsBadBatchSizes) {
  const ArchSpec a = small_net();
  const Batch data = data::synthetic_blobs(a.input, 3, 10, 1);
  TrainConfig cfg;
  cfg.logical_batch = 4;
  cfg.physical_batch = 8;
  EXPECT_THROW(train(a, data, cfg), ParseError);
  cfg.physical_batch = 0;
  EXPECT_THROW(train(a, data, cfg), ParseError);
}

TEST(Train, AdamAndMeanReductionLearn) {
  const ArchSpec a = small_net();
  const Batch data = data::synthetic_blobs(a.input, 3, 90, 2);
  TrainConfig cfg;
  cfg.optimizer = OptimizerKind::Adam;
  cfg.reduction = dp::Reduction::Mean;
  cfg.lr = 0.05;
  cfg.logical_batch = 30;
  cfg.physical_batch = 15;
  cfg.epochs = 5;
  EXPECT_GT(train(a, data, cfg).epochs.back().accuracy, 0.9);
}

TEST(Bisection, ExactThreshold) {
  for (std::int64_t budget : {5, 100, 101, 4095, 100000}) {
    const auto f = [](std::size_t b) { return static_cast<std::int64_t>(7 * b + 3); };
    const bench::SearchResult r = bench::max_feasible_batch(f, budget, 1 << 20);
    const std::size_t want = budget < 10 ? 0 : static_cast<std::size_t>((budget - 3) / 7);
    EXPECT_EQ(r.max_batch, want) << budget;
    if (want > 0) {
      EXPECT_LE(r.floats_at_max, budget);
      ASSERT_TRUE(r.floats_above.has_value());
      EXPECT_GT(*r.floats_above, budget);
    }
  }
  const bench::SearchResult capped = bench::max_feasible_batch([](std::size_t) { return std::int64_t{1}; }, 10, 100);
  EXPECT_TRUE(capped.hit_limit);
  EXPECT_EQ(capped.max_batch, 100u);
}

TEST(Bench, GhostBeatsInstantiateWhenTSmall) {
  // Linear layers: T = 1, so 2T² ≪ pD.
  const ArchSpec a = load_arch(kData + "/arch/mlp_256.json");
  Rng rng(1);
  const ParamSet p = init_params(a, rng);
  const clip::ClipOptions opt;
  const auto ghost = bench::step_floats(a, p, clip::ClipMethod::Ghost, 8, opt, 0);
  const auto inst = bench::step_floats(a, p, clip::ClipMethod::Instantiate, 8, opt, 0);
  const auto second = bench::step_floats(a, p, clip::ClipMethod::SecondPass, 8, opt, 0);
  EXPECT_LT(ghost, inst);
  EXPECT_LT(ghost, second);
}

TEST(Bench, MixedNoWorseOnBundledArchs) {
  for (const char* name : {"smallcnn_32", "mlp_256"}) {
    bench::BenchConfig cfg;
    cfg.physical_batch = 4;
    cfg.timing = false;
    const auto rows = bench::run(load_arch(kData + "/arch/" + name + ".json"), cfg);
    std::int64_t others = INT64_MAX, mixed = 0;
    for (const bench::BenchRow& r : rows) {
      if (r.method == clip::ClipMethod::Mixed) {
        mixed = r.peak_floats;
      } else {
        others = std::min(others, r.peak_floats);
      }
    }
    EXPECT_LE(mixed, others) << name;
  }
  // VGG-11 at 224 is beyond desk memory for the ghost engine (conv1 alone needs
  // 2T² ≈ 5·10⁹ floats per sample), so it is compared through the cost model.
  const ArchSpec vgg = load_arch(kData + "/arch/vgg11_224.json");
  const auto mixed = cost::algo_costs(vgg, 1, cost::Algorithm::Mixed).network_space;
  for (cost::Algorithm alg : {cost::Algorithm::Ghost, cost::Algorithm::Opacus, cost::Algorithm::FastGradClip}) {
    EXPECT_LE(mixed, cost::algo_costs(vgg, 1, alg).network_space);
  }
}

TEST(Bench, MaxBatchVerifiedByDirectRuns) {
  const ArchSpec a = load_arch(kData + "/arch/mlp_256.json");
  bench::BenchConfig cfg;
  cfg.methods = {clip::ClipMethod::Instantiate, clip::ClipMethod::Mixed};
  cfg.budget = 3000000;
  cfg.timing = false;
  Rng rng(derive_seed(cfg.seed, 1));
  const ParamSet p = init_params(a, rng);
  for (const bench::BenchRow& r : bench::run(a, cfg)) {
    ASSERT_GT(r.search.max_batch, 0u);
    EXPECT_LE(bench::step_floats(a, p, r.method, r.search.max_batch, cfg.clip, cfg.seed), cfg.budget);
    EXPECT_GT(bench::step_floats(a, p, r.method, r.search.max_batch + 1, cfg.clip, cfg.seed), cfg.budget);
  }
}

}  // namespace
}  // namespace dpclip

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

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dpclip/clip.hpp"
#include "dpclip/dp.hpp"
#include "dpclip/net.hpp"

namespace dpclip {

enum class OptimizerKind { Sgd, Adam };

struct TrainConfig {
  clip::ClipMethod method = clip::ClipMethod::Mixed;
  clip::ClipOptions clip;
  double sigma = 0.0;
  double lr = 0.1;
  std::size_t logical_batch = 64;
  std::size_t physical_batch = 64;
  std::size_t epochs = 1;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::Sgd;
  dp::Reduction reduction = dp::Reduction::Sum;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0;  // mean per-sample loss seen by the clipping passes
  double eval_loss = 0;   // mean loss on the full set after the epoch
  double accuracy = 0;    // training accuracy after the epoch
  std::size_t steps = 0;  // real (noised) steps taken this epoch
  double seconds = 0;
};

struct TrainResult {
  ParamSet params;
  std::vector<EpochMetrics> epochs;
};

/// Seed streams derived from TrainConfig::seed.
namespace seed_stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kShuffle = 2;
inline constexpr std::uint64_t kNoise = 3;
}  // namespace seed_stream

/// Shuffles every epoch, splits each logical batch into physical chunks,
/// accumulates their clipped sums with virtual steps and privatizes once per
/// logical batch. A trailing partial logical batch is still applied.
TrainResult train(const ArchSpec& arch, const Batch& data, const TrainConfig& config,
                  const std::function<void(const EpochMetrics&)>& on_epoch = {});

/// Loss and accuracy over the whole set, evaluated in chunks.
EpochMetrics evaluate_dataset(const ArchSpec& arch, const ParamSet& params, const Batch& data,
                              std::size_t chunk);

/// Flat parameter dump: for each tensor in ParamSet order, a little-endian
/// u32 rank, u64 dimensions, then little-endian float64 values.
void save_params(const std::string& path, const ParamSet& params);
ParamSet load_params(const std::string& path);

}  // namespace dpclip

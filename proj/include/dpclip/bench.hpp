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
#include <optional>
#include <vector>

#include "dpclip/clip.hpp"
#include "dpclip/net.hpp"

namespace dpclip::bench {

struct BenchConfig {
  std::vector<clip::ClipMethod> methods{clip::ClipMethod::Instantiate, clip::ClipMethod::SecondPass,
                                        clip::ClipMethod::Ghost, clip::ClipMethod::Mixed};
  clip::ClipOptions clip;
  std::size_t physical_batch = 16;
  std::size_t epoch_samples = 256;
  std::int64_t budget = 0;          // floats; 0 skips the batch search
  std::size_t batch_limit = 4096;   // search ceiling
  std::uint64_t seed = 0;
  bool timing = true;
};

/// Floats held while one clipped_gradient call runs on a batch of B: the
/// parameters and the input batch plus the call's peak transient. This is the
/// counterpart of a GPU allocator's active memory, not its reserved total.
std::int64_t step_floats(const ArchSpec& arch, const ParamSet& params, clip::ClipMethod method,
                         std::size_t batch, const clip::ClipOptions& options, std::uint64_t seed);

struct SearchResult {
  std::size_t max_batch = 0;          // 0 when even B = 1 is over budget
  std::int64_t floats_at_max = 0;
  std::optional<std::int64_t> floats_above;  // at max_batch + 1; empty when the limit was hit
  bool hit_limit = false;
};

/// Largest B in [1, limit] with floats(B) ≤ budget, assuming floats is
/// non-decreasing in B. Doubling then bisection; both end points are
/// evaluated directly.
SearchResult max_feasible_batch(const std::function<std::int64_t(std::size_t)>& floats, std::int64_t budget,
                                std::size_t limit);

struct BenchRow {
  clip::ClipMethod method = clip::ClipMethod::Mixed;
  std::int64_t peak_floats = 0;  // at the fixed physical batch
  double seconds_per_epoch = 0;
  SearchResult search;
  double seconds_at_max = 0;     // per epoch at the maximum batch
};

std::vector<BenchRow> run(const ArchSpec& arch, const BenchConfig& config);

}  // namespace dpclip::bench

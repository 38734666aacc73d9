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

#include "dpclip/bench.hpp"

#include <chrono>

#include "dpclip/counters.hpp"
#include "dpclip/data.hpp"
#include "dpclip/errors.hpp"
#include "dpclip/rng.hpp"

namespace dpclip::bench {
namespace {

Batch bench_batch(const ArchSpec& arch, std::size_t batch, std::uint64_t seed) {
  return data::synthetic_blobs(arch.input, arch.classes, batch, derive_seed(seed, 4));
}

double epoch_seconds(const ArchSpec& arch, const ParamSet& params, clip::ClipMethod method, std::size_t chunk,
                     const BenchConfig& config) {
  const Batch data = data::synthetic_blobs(arch.input, arch.classes, config.epoch_samples, derive_seed(config.seed, 4));
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t b = 0; b < data.size(); b += chunk) {
    const Batch part = data.slice(b, std::min(b + chunk, data.size()));
    (void)clip::clipped_gradient(arch, params, part, method, config.clip);
  }
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::int64_t step_floats(const ArchSpec& arch, const ParamSet& params, clip::ClipMethod method,
                         std::size_t batch, const clip::ClipOptions& options, std::uint64_t seed) {
  const Batch b = bench_batch(arch, batch, seed);
  const std::int64_t held = static_cast<std::int64_t>(params.count() + b.inputs.size());
  counters::Scope scope;
  { const clip::ClipResult r = clip::clipped_gradient(arch, params, b, method, options); }
  return held + scope.peak_transient();
}

SearchResult max_feasible_batch(const std::function<std::int64_t(std::size_t)>& floats, std::int64_t budget,
                                std::size_t limit) {
  SearchResult out;
  if (limit == 0) return out;
  const std::int64_t at_one = floats(1);
  if (at_one > budget) {
    out.floats_above = at_one;
    return out;
  }
  std::size_t lo = 1;  // feasible
  std::int64_t lo_floats = at_one;
  std::size_t hi = 0;  // infeasible, 0 = unknown
  while (hi == 0) {
    const std::size_t next = std::min(lo * 2, limit);
    if (next == lo) break;
    const std::int64_t f = floats(next);
    if (f <= budget) {
      lo = next;
      lo_floats = f;
    } else {
      hi = next;
    }
  }
  if (hi == 0) {
    out.max_batch = lo;
    out.floats_at_max = lo_floats;
    out.hit_limit = true;
    return out;
  }
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    const std::int64_t f = floats(mid);
    if (f <= budget) {
      lo = mid;
      lo_floats = f;
    } else {
      hi = mid;
    }
  }
  out.max_batch = lo;
  out.floats_at_max = floats(lo);
  out.floats_above = floats(lo + 1);
  if (out.floats_at_max != lo_floats || *out.floats_above <= budget) {
    throw StateError("memory use is not monotone in the batch size");
  }
  return out;
}

std::vector<BenchRow> run(const ArchSpec& arch, const BenchConfig& config) {
  if (config.physical_batch == 0) throw ParseError("physical batch size must be positive");
  Rng init(derive_seed(config.seed, 1));
  const ParamSet params = init_params(arch, init);
  std::vector<BenchRow> rows;
  for (clip::ClipMethod method : config.methods) {
    BenchRow row;
    row.method = method;
    row.peak_floats = step_floats(arch, params, method, config.physical_batch, config.clip, config.seed);
    if (config.timing) row.seconds_per_epoch = epoch_seconds(arch, params, method, config.physical_batch, config);
    if (config.budget > 0) {
      row.search = max_feasible_batch(
          [&](std::size_t b) { return step_floats(arch, params, method, b, config.clip, config.seed); },
          config.budget, config.batch_limit);
      if (config.timing && row.search.max_batch > 0) {
        row.seconds_at_max = epoch_seconds(arch, params, method, row.search.max_batch, config);
      }
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace dpclip::bench

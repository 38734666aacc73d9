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
#include <optional>
#include <random>

#include "dpclip/tensor.hpp"

namespace dpclip {

/// Seeded deterministic generator: std::mt19937_64 for raw bits, explicit
/// bit-to-double conversion, and Box–Muller for normals, so the stream is
/// fully specified by the seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal. Box–Muller produces pairs; the second value of a pair
  /// is returned by the next call.
  double gaussian();

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// Tensor of i.i.d. standard normals drawn in row-major order.
Tensor gaussian(Rng& rng, const Shape& shape);
Tensor uniform(Rng& rng, const Shape& shape, double lo, double hi);

/// Deterministic seed for an independent sub-stream (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace dpclip

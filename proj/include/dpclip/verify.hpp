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
#include <string>
#include <vector>

#include "dpclip/arch.hpp"

namespace dpclip::verify {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;  // observed vs expected on failure, a summary otherwise
};

/// All five clipping methods against the per-sample loop on random networks,
/// for every clipping function. Relative tolerance on the clipped sum.
CheckResult clip_equivalence(std::uint64_t seed, std::size_t networks = 20, double tol = 1e-9);

/// Ghost norm and instantiated squared norm against a nested-loop per-sample
/// weight gradient on random conv geometries.
CheckResult ghost_vs_instantiate(std::uint64_t seed, std::size_t configs = 300, double tol = 1e-9);

/// unfold + matmul convolution against direct convolution.
CheckResult conv_oracle(std::uint64_t seed, std::size_t geometries = 200, double tol = 1e-12);

/// Central differences against the reverse pass, one network per spatial
/// rank plus an MLP, covering conv, linear, relu, max/avg pool and flatten.
CheckResult finite_differences(std::uint64_t seed, double step = 1e-5, double tol = 1e-5);

/// Counted mul_adds of the forward matmul, the instantiation matmul and the
/// ghost Gram matrices against their closed forms, exactly.
CheckResult flop_model(std::uint64_t seed, std::size_t geometries = 50);

struct MemoryOrderingStats {
  std::size_t configs = 0;
  std::size_t ordering_matches = 0;  // measured ghost < inst  ⇔  2T² < pD
  std::size_t exact_matches = 0;     // measured = B(2T²+1) and B(pD+1)
  std::size_t decision_matches = 0;  // decide_plan picks the measured minimum
  std::size_t near_ties = 0;         // |2T² − pD| within the bookkeeping slack, excluded
  std::size_t crossings_ghost = 0;   // configs on the ghost side of the threshold
};

/// Measured peak transient floats of the norm phase on a family of single
/// conv layers straddling 2T² = pD.
CheckResult memory_ordering(std::uint64_t seed, std::size_t configs = 200,
                            MemoryOrderingStats* stats = nullptr);

/// Empirical variance of privatize(0) noise over `draws` coordinates, divided
/// by (σR)², must lie in [0.95, 1.05]; σ = 0 must be the identity.
CheckResult noise_variance(std::uint64_t seed, std::size_t draws = 10000);

/// clip::decide_plan and cost::decision_table agree for both priorities.
CheckResult decision_agreement(const ArchSpec& arch);

/// Clipped sums of every method agree with the per-sample loop on `arch`.
CheckResult arch_equivalence(const ArchSpec& arch, std::uint64_t seed, std::size_t batch = 4,
                             double tol = 1e-9);

/// Training with logical batch 64 split into physical 16 vs 64, σ = 0.
CheckResult chunk_invariance(const ArchSpec& arch, std::uint64_t seed, double tol = 1e-9);

struct SuiteOptions {
  std::uint64_t seed = 0;
  std::optional<ArchSpec> arch;  // extra arch-specific checks when present
};

std::vector<CheckResult> run_suite(const SuiteOptions& options);

}  // namespace dpclip::verify

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

#include <cstddef>
#include <string>
#include <vector>

#include "dpclip/arch.hpp"
#include "dpclip/clip.hpp"

namespace dpclip::cost {

/// Exact operation/float counts. Products such as 2BT²(D+p+1) overflow 64
/// bits for large layers and batches, so all arithmetic is 128-bit.
using Count = __int128;

std::string to_string(Count v);
double to_double(Count v);
/// Rounds half-up to `sig` significant figures: 5035261952 → "5.0e9";
/// values below 10^sig print as integers.
std::string format_sig(Count v, int sig = 2);

/// Dimensions of one trainable layer in the linear view: s = a·W with
/// a ∈ ℝ^{T×D}, W ∈ ℝ^{D×p}.
struct LayerDims {
  std::string name;
  Count positions = 0;   // T
  Count patch_size = 0;  // D
  Count outputs = 0;     // p
};

std::vector<LayerDims> layer_dims(const ArchSpec& arch);

/// Time (arithmetic operations) and space (floats) of each module for one
/// layer at batch size B.
struct LayerCost {
  Count forward_time = 0;          // 2BTpD
  Count backprop_time = 0;         // 2BTD(2p+1)
  Count ghost_norm_time = 0;       // 2BT²(D+p+1) − B
  Count instantiate_time = 0;      // 2B(T+1)pD
  Count weighted_grad_time = 0;    // 2BpD
  Count backprop_space = 0;        // BTp + 2BTD + pD
  Count ghost_norm_space = 0;      // B(2T²+1)
  Count instantiate_space = 0;     // B(pD+1)
  Count weighted_grad_space = 0;   // 0
};

LayerCost layer_costs(const LayerDims& dims, Count batch);

enum class Algorithm { NonDP, Opacus, FastGradClip, Ghost, Mixed };
std::string to_string(Algorithm a);
std::vector<Algorithm> all_algorithms();

struct AlgoLayerCost {
  std::string layer;
  clip::Decision decision = clip::Decision::Instantiate;  // meaningful for Mixed
  Count time = 0;             // composed from the module costs
  Count space = 0;            // composed from the module costs
  Count leading_time = 0;     // highest-order terms only
  Count leading_space = 0;
};

/// Per-algorithm costs. Every algorithm is forward + back-propagation plus:
/// Opacus instantiation + weighted sum; FastGradClip instantiation + second
/// back-propagation; Ghost ghost norm + second back-propagation; Mixed the
/// cheaper norm module per layer + second back-propagation.
struct AlgoCost {
  Algorithm algorithm = Algorithm::NonDP;
  std::vector<AlgoLayerCost> layers;
  Count total_time = 0;
  Count total_leading_time = 0;
  /// Σ per-layer space.
  Count summed_space = 0;
  /// Network-level peak: stored activations of every layer plus the norm
  /// transient. Opacus holds every layer's per-sample gradients at once;
  /// the others hold one layer's norm buffers at a time.
  Count network_space = 0;
};

AlgoCost algo_costs(const ArchSpec& arch, Count batch, Algorithm algorithm,
                    clip::Priority priority = clip::Priority::Memory);

struct DecisionRow {
  std::string layer;
  Count positions = 0;
  Count patch_size = 0;
  Count outputs = 0;
  Count ghost = 0;        // memory: 2T²; speed: 2T²(D+p+1)
  Count instantiate = 0;  // memory: pD;  speed: 2(T+1)pD
  clip::Decision decision = clip::Decision::Instantiate;
};

struct DecisionTable {
  clip::Priority priority = clip::Priority::Memory;
  std::vector<DecisionRow> rows;
  Count ghost_total = 0;
  Count instantiate_total = 0;
  Count mixed_total = 0;  // Σ min(ghost, instantiate)
};

DecisionTable decision_table(const ArchSpec& arch, clip::Priority priority);

}  // namespace dpclip::cost

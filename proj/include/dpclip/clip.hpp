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
#include "dpclip/net.hpp"
#include "dpclip/tensor.hpp"

namespace dpclip::clip {

enum class ClipKind { Abadi, Automatic, Global };

/// Per-sample clipping function C(‖g‖; R). Every kind satisfies C·‖g‖ ≤ R.
struct ClipFn {
  ClipKind kind = ClipKind::Abadi;
  double R = 1.0;
  double gamma = 0.01;  // automatic clipping stabilizer

  /// abadi: min(R/‖g‖, 1) (1 at ‖g‖ = 0); automatic: R/(‖g‖ + γ);
  /// global: 1 if ‖g‖ < R else 0.
  double factor(double norm) const;
};

double clip_factor(double norm, const ClipFn& fn);

enum class Decision { GhostNorm, Instantiate };
enum class Priority { Memory, Speed };
enum class ClipMethod { Naive, Instantiate, SecondPass, Ghost, Mixed };

struct LayerDecision {
  std::string layer;
  std::size_t positions = 0;   // T
  std::size_t patch_size = 0;  // D
  std::size_t outputs = 0;     // p
  Decision decision = Decision::Instantiate;
  /// Memory priority: 2T² and pD. Speed priority: 2T²(D+p+1) and 2(T+1)pD.
  double ghost_cost = 0;
  double instantiate_cost = 0;
};

struct ClipPlan {
  Priority priority = Priority::Memory;
  std::vector<LayerDecision> layers;  // one per trainable layer
};

/// Layerwise choice between ghost norm and gradient instantiation. Ghost norm
/// wins only when strictly cheaper; ties go to instantiation. Independent of
/// batch size.
ClipPlan decide_plan(const ArchSpec& arch, Priority priority);

/// Squared Frobenius norm of each per-sample weight gradient from the two
/// T×T Gram matrices, never forming the D×p gradient. activations is B×T×D,
/// output_grads is B×T×p. Returns B values.
Tensor ghost_norm_layer(const Tensor& activations, const Tensor& output_grads);

struct InstantiatedGrads {
  Tensor grads;     // B×D×p
  Tensor sq_norms;  // B
};
/// Materializes gᵢ = U(aᵢ)ᵀ·∂L/∂sᵢ for every sample, then its squared norm.
InstantiatedGrads instantiate_layer(const Tensor& activations, const Tensor& output_grads);

struct BiasGrads {
  Tensor grads;     // B×p
  Tensor sq_norms;  // B
};
/// Per-sample bias gradients: column sums of ∂L/∂sᵢ over positions.
BiasGrads bias_norms_layer(const Tensor& output_grads);

struct ClipOptions {
  ClipFn fn;
  Priority priority = Priority::Memory;
  /// Include bias gradients in the per-sample norm.
  bool include_bias = true;
};

struct ClipResult {
  ParamSet clipped_sum;          // Σᵢ Cᵢ·gᵢ
  std::vector<double> norms;     // ‖gᵢ‖
  std::vector<double> factors;   // Cᵢ
  std::vector<double> losses;    // Lᵢ at the current parameters
};

/// Summed clipped gradient by the chosen engine. Every method returns the
/// same result up to rounding; Naive (one backward per sample) is the oracle.
ClipResult clipped_gradient(const ArchSpec& arch, const ParamSet& params, const Batch& batch,
                            ClipMethod method, const ClipOptions& options);

std::string to_string(ClipMethod m);
std::string to_string(ClipKind k);
std::string to_string(Decision d);
std::string to_string(Priority p);
ClipMethod parse_method(const std::string& s);
ClipKind parse_clip_kind(const std::string& s);
Priority parse_priority(const std::string& s);

}  // namespace dpclip::clip

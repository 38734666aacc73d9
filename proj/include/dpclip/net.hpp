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
#include <span>
#include <vector>

#include "dpclip/arch.hpp"
#include "dpclip/rng.hpp"
#include "dpclip/tensor.hpp"

namespace dpclip {

/// Weight (D×p) and optional bias (p) of one conv/linear layer.
struct LayerParams {
  Tensor weight;
  Tensor bias;  // empty when the layer has no bias
};

/// Parameters, or gradients with the same layout, for every trainable layer
/// in network order.
struct ParamSet {
  std::vector<LayerParams> layers;

  static ParamSet zeros_like(const ArchSpec& arch);
  std::size_t count() const;
  /// Every tensor in the fixed order weight₁, bias₁, weight₂, ...
  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
};

/// He-normal weights, zero biases.
ParamSet init_params(const ArchSpec& arch, Rng& rng);

/// dst += alpha · src
void add_scaled(ParamSet& dst, double alpha, const ParamSet& src);
double squared_norm(const ParamSet& p);
/// ‖a − b‖₂ / max(‖a‖₂, ‖b‖₂) over all coordinates; 0 when both are zero.
double relative_difference(const ParamSet& a, const ParamSet& b);
bool bit_equal(const ParamSet& a, const ParamSet& b);

/// Inputs are (B, input shape...). Labels are 0-based class indices.
struct Batch {
  Tensor inputs;
  std::vector<std::size_t> labels;

  std::size_t size() const { return labels.size(); }
  /// Samples [begin, end).
  Batch slice(std::size_t begin, std::size_t end) const;
  /// Samples at the given indices, in that order.
  Batch gather(std::span<const std::size_t> indices) const;
};

/// Per trainable layer: the layer input (unfolded to B×T×D for conv layers,
/// B×1×D for linear ones) and the output gradient ∂L/∂s (B×T×p).
struct LayerCapture {
  Tensor activations;
  Tensor output_grads;
};

/// Everything one forward/backward pass leaves behind.
struct BatchCache {
  std::vector<LayerCapture> captures;  // per trainable layer
  std::vector<double> losses;          // per sample, unreduced
  Tensor logits;                       // (B, classes)
  std::vector<std::size_t> labels;
  bool has_output_grads = false;

  // Layer-local state needed by the reverse pass, indexed by layer.
  std::vector<Tensor> relu_inputs;
  std::vector<std::vector<std::size_t>> pool_argmax;

  std::size_t batch_size() const { return labels.size(); }
  void release();
};

struct ForwardResult {
  std::vector<double> losses;
  Tensor logits;
};

/// Runs the network, recording the layer inputs the reverse pass needs.
BatchCache forward(const ArchSpec& arch, const ParamSet& params, const Batch& batch);

/// Logits and per-sample cross-entropy losses only; keeps nothing.
ForwardResult evaluate(const ArchSpec& arch, const ParamSet& params, const Batch& batch);

/// Reverse pass for the loss Σᵢ wᵢ·Lᵢ. Returns the summed parameter
/// gradients; when `capture` is set, stores ∂L/∂s of every trainable layer
/// in the cache. Throws StateError if the cache holds no forward pass.
ParamSet backward(const ArchSpec& arch, const ParamSet& params, BatchCache& cache,
                  std::span<const double> loss_weights, bool capture = true);

/// backward with all weights equal to 1.
ParamSet backward(const ArchSpec& arch, const ParamSet& params, BatchCache& cache);

/// Gradient of Σᵢ Cᵢ·Lᵢ, recomputing the forward pass internally.
ParamSet second_backward(const ArchSpec& arch, const ParamSet& params, const Batch& batch,
                         std::span<const double> weights);

/// Fraction of samples whose arg-max logit equals the label.
double accuracy(const Tensor& logits, std::span<const std::size_t> labels);

}  // namespace dpclip

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
#include <span>
#include <vector>

#include "dpclip/arch.hpp"
#include "dpclip/conv.hpp"
#include "dpclip/net.hpp"
#include "dpclip/rng.hpp"

// Slow loop-based oracles. Nothing here goes through unfold or gemm.
namespace dpclip::reference {

/// Convolution by nested loops over output positions, channels and taps.
/// `batch` is (B, spatial..., d); the result is (B, output spatial..., p).
/// Weight row c·K + k pairs input channel c with row-major kernel offset k.
Tensor direct_conv(const Tensor& batch, const Tensor& weight, const Tensor& bias,
                   const conv::ConvGeometry& g);

/// One sample's weight gradient (D×p) from its layer input (spatial..., d)
/// and output gradient (output spatial..., p), by nested loops.
Tensor direct_weight_grad(std::span<const double> input, std::span<const double> output_grad,
                          const conv::ConvGeometry& g);

struct GeometryLimits {
  std::size_t max_rank = 3;
  std::size_t max_stride = 3;
  std::size_t max_padding = 2;
  std::size_t max_dilation = 2;
  std::size_t max_channels = 4;
};

/// A valid 1D/2D/3D geometry with small spatial sizes. rank 0 picks one.
conv::ConvGeometry random_geometry(Rng& rng, std::size_t rank = 0, const GeometryLimits& limits = {});

/// 1–4 trainable layers. Spatial inputs get 1–3 convs of one rank with
/// optional ReLU and max/avg pooling, then flatten and linear layers; rank 0
/// inputs get an MLP.
ArchSpec random_arch(Rng& rng);

Batch random_batch(const ArchSpec& arch, std::size_t batch, Rng& rng);

/// Gaussian weights scaled by 1/√D and nonzero Gaussian biases.
ParamSet random_params(const ArchSpec& arch, Rng& rng);

/// Per-sample gradients, one batch-size-1 reverse pass each.
std::vector<ParamSet> per_sample_grads(const ArchSpec& arch, const ParamSet& params, const Batch& batch);

/// Central differences of Σᵢ wᵢ·Lᵢ with respect to every parameter.
ParamSet finite_difference_grad(const ArchSpec& arch, const ParamSet& params, const Batch& batch,
                                std::span<const double> weights, double step);

}  // namespace dpclip::reference

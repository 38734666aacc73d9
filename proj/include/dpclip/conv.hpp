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

#include "dpclip/tensor.hpp"

namespace dpclip::conv {

/// Dimensional facts of one 1D/2D/3D convolution with full channel
/// connectivity. Activations are channels-last: (spatial..., channels).
struct ConvGeometry {
  std::size_t in_channels = 0;   // d
  std::size_t out_channels = 0;  // p
  Shape input;
  Shape kernel;
  Shape stride;
  Shape padding;
  Shape dilation;
  Shape output;
  std::size_t positions = 0;   // T: product of output spatial sizes
  std::size_t patch_size = 0;  // D: d · product of kernel sizes

  /// Resolves output sizes, T and D. Throws GeometryError when any output
  /// size would be < 1 or a parameter is out of range.
  static ConvGeometry make(std::size_t in_channels, std::size_t out_channels, Shape input,
                           Shape kernel, Shape stride, Shape padding, Shape dilation);

  std::size_t spatial_rank() const { return input.size(); }
  std::size_t kernel_volume() const;
  std::size_t input_volume() const;  // product(input) · d
  Shape input_shape() const;         // (input..., d)
  Shape output_shape() const;        // (output..., p)
  /// Throws if stored derived fields disagree with the primary ones.
  void validate() const;
};

/// floor((in + 2·pad − dil·(k−1) − 1)/stride + 1) per axis.
Shape output_dims(const Shape& input, const Shape& kernel, const Shape& stride,
                  const Shape& padding, const Shape& dilation);

/// Writes the T×D receptive-field matrix of one sample. Row t is output
/// position t in row-major order; column c·K + k is input channel c at kernel
/// offset k (offsets row-major), K being the kernel volume. Data movement
/// only: no arithmetic is counted.
void unfold_into(std::span<const double> sample, const ConvGeometry& g, MatrixView out);

/// Adjoint of unfold: scatters a T×D matrix back onto the input grid,
/// accumulating where receptive fields overlap.
void unfold_adjoint_into(ConstMatrixView cols, const ConvGeometry& g, std::span<double> sample);

/// Single sample (input..., d) → T×D.
Tensor unfold(const Tensor& sample, const ConvGeometry& g);

/// T×p → (output..., p). Pure reshape.
Tensor fold(const Tensor& flat, const ConvGeometry& g);
/// (output..., p) → T×p. Exact inverse of fold.
Tensor fold_inverse(const Tensor& folded, const ConvGeometry& g);

/// Batched convolution via unfold + matmul: a is (B, input..., d), weight is
/// D×p, bias is length p or empty. Returns (B, output..., p).
Tensor conv_forward(const Tensor& a, const Tensor& weight, const Tensor& bias,
                    const ConvGeometry& g);

namespace testing {
/// Mutation hook for the verification suite: when set, unfold emits its rows
/// in reverse order, which breaks agreement with direct convolution.
void set_corrupt_unfold(bool enabled);
bool corrupt_unfold();
}  // namespace testing

}  // namespace dpclip::conv

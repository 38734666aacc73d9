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

#include "dpclip/conv.hpp"

#include <atomic>
#include <string>

#include "dpclip/counters.hpp"
#include "dpclip/errors.hpp"

namespace dpclip::conv {
namespace {

std::atomic<bool> g_corrupt_unfold{false};

// Row-major coordinates of every index in a grid of the given extents.
std::vector<std::vector<long>> grid_coords(const Shape& extents) {
  const std::size_t n = numel(extents);
  std::vector<std::vector<long>> out(n, std::vector<long>(extents.size()));
  for (std::size_t idx = 0; idx < n; ++idx) {
    std::size_t rem = idx;
    for (std::size_t j = extents.size(); j-- > 0;) {
      out[idx][j] = static_cast<long>(rem % extents[j]);
      rem /= extents[j];
    }
  }
  return out;
}

// For each (t, k), the linear spatial index into the input grid, or -1 when
// the tap falls into padding.
std::vector<long> gather_table(const ConvGeometry& g) {
  const std::size_t rank = g.spatial_rank();
  const auto out_coords = grid_coords(g.output);
  const auto k_coords = grid_coords(g.kernel);
  const std::size_t kv = k_coords.size();
  std::vector<long> table(g.positions * kv);
  for (std::size_t t = 0; t < g.positions; ++t) {
    for (std::size_t k = 0; k < kv; ++k) {
      long linear = 0;
      bool inside = true;
      for (std::size_t j = 0; j < rank; ++j) {
        const long in = out_coords[t][j] * static_cast<long>(g.stride[j]) -
                        static_cast<long>(g.padding[j]) +
                        k_coords[k][j] * static_cast<long>(g.dilation[j]);
        if (in < 0 || in >= static_cast<long>(g.input[j])) {
          inside = false;
          break;
        }
        linear = linear * static_cast<long>(g.input[j]) + in;
      }
      table[t * kv + k] = inside ? linear : -1;
    }
  }
  return table;
}

void check_axes(const Shape& v, std::size_t rank, const char* what) {
  if (v.size() != rank) {
    throw GeometryError(std::string(what) + " has " + std::to_string(v.size()) +
                        " entries for a " + std::to_string(rank) + "D convolution");
  }
}

}  // namespace

Shape output_dims(const Shape& input, const Shape& kernel, const Shape& stride,
                  const Shape& padding, const Shape& dilation) {
  const std::size_t rank = input.size();
  if (rank == 0 || rank > 3) throw GeometryError("convolutions must be 1D, 2D or 3D");
  check_axes(kernel, rank, "kernel");
  check_axes(stride, rank, "stride");
  check_axes(padding, rank, "padding");
  check_axes(dilation, rank, "dilation");
  Shape out(rank);
  for (std::size_t j = 0; j < rank; ++j) {
    if (kernel[j] < 1 || stride[j] < 1 || dilation[j] < 1 || input[j] < 1) {
      throw GeometryError("kernel, stride, dilation and input sizes must be >= 1");
    }
    const long numer = static_cast<long>(input[j] + 2 * padding[j]) -
                       static_cast<long>(dilation[j] * (kernel[j] - 1)) - 1;
    if (numer < 0) {
      throw GeometryError("axis " + std::to_string(j) + ": effective kernel extent " +
                          std::to_string(dilation[j] * (kernel[j] - 1) + 1) +
                          " exceeds padded input " + std::to_string(input[j] + 2 * padding[j]));
    }
    out[j] = static_cast<std::size_t>(numer) / stride[j] + 1;
  }
  return out;
}

ConvGeometry ConvGeometry::make(std::size_t in_channels, std::size_t out_channels, Shape input,
                                Shape kernel, Shape stride, Shape padding, Shape dilation) {
  if (in_channels < 1 || out_channels < 1) throw GeometryError("channel counts must be >= 1");
  ConvGeometry g;
  g.in_channels = in_channels;
  g.out_channels = out_channels;
  g.output = output_dims(input, kernel, stride, padding, dilation);
  g.input = std::move(input);
  g.kernel = std::move(kernel);
  g.stride = std::move(stride);
  g.padding = std::move(padding);
  g.dilation = std::move(dilation);
  g.positions = numel(g.output);
  g.patch_size = in_channels * numel(g.kernel);
  return g;
}

std::size_t ConvGeometry::kernel_volume() const { return numel(kernel); }
std::size_t ConvGeometry::input_volume() const { return numel(input) * in_channels; }

Shape ConvGeometry::input_shape() const {
  Shape s = input;
  s.push_back(in_channels);
  return s;
}

Shape ConvGeometry::output_shape() const {
  Shape s = output;
  s.push_back(out_channels);
  return s;
}

void ConvGeometry::validate() const {
  const Shape expect = output_dims(input, kernel, stride, padding, dilation);
  if (expect != output || positions != numel(output) ||
      patch_size != in_channels * numel(kernel)) {
    throw GeometryError("convolution geometry fields are inconsistent");
  }
}

void unfold_into(std::span<const double> sample, const ConvGeometry& g, MatrixView out) {
  if (sample.size() != g.input_volume()) {
    throw ShapeError("unfold: sample has " + std::to_string(sample.size()) + " values, geometry expects " +
                     std::to_string(g.input_volume()));
  }
  if (out.rows != g.positions || out.cols != g.patch_size) throw ShapeError("unfold: output is not T×D");
  const std::size_t kv = g.kernel_volume();
  const std::size_t d = g.in_channels;
  const std::vector<long> table = gather_table(g);
  const bool reversed = g_corrupt_unfold.load(std::memory_order_relaxed);
  for (std::size_t t = 0; t < g.positions; ++t) {
    double* row = out.row(reversed ? g.positions - 1 - t : t);
    const long* taps = table.data() + t * kv;
    for (std::size_t c = 0; c < d; ++c) {
      for (std::size_t k = 0; k < kv; ++k) {
        row[c * kv + k] = taps[k] < 0 ? 0.0 : sample[static_cast<std::size_t>(taps[k]) * d + c];
      }
    }
  }
}

void unfold_adjoint_into(ConstMatrixView cols, const ConvGeometry& g, std::span<double> sample) {
  if (sample.size() != g.input_volume() || cols.rows != g.positions || cols.cols != g.patch_size) {
    throw ShapeError("unfold adjoint: shape mismatch");
  }
  const std::size_t kv = g.kernel_volume();
  const std::size_t d = g.in_channels;
  const std::vector<long> table = gather_table(g);
  const bool reversed = g_corrupt_unfold.load(std::memory_order_relaxed);
  for (std::size_t t = 0; t < g.positions; ++t) {
    const double* row = cols.row(reversed ? g.positions - 1 - t : t);
    const long* taps = table.data() + t * kv;
    for (std::size_t c = 0; c < d; ++c) {
      for (std::size_t k = 0; k < kv; ++k) {
        if (taps[k] >= 0) sample[static_cast<std::size_t>(taps[k]) * d + c] += row[c * kv + k];
      }
    }
  }
}

Tensor unfold(const Tensor& sample, const ConvGeometry& g) {
  if (sample.shape() != g.input_shape()) {
    throw ShapeError("unfold: sample shape " + to_string(sample.shape()) + " does not match geometry input " +
                     to_string(g.input_shape()));
  }
  Tensor out({g.positions, g.patch_size});
  unfold_into(sample.values(), g, out.matrix());
  return out;
}

Tensor fold(const Tensor& flat, const ConvGeometry& g) {
  if (flat.rank() != 2 || flat.dim(0) != g.positions) {
    throw ShapeError("fold: expected " + std::to_string(g.positions) + " rows, got shape " +
                     to_string(flat.shape()));
  }
  Shape s = g.output;
  s.push_back(flat.dim(1));
  Tensor out(flat);
  out.reshape(std::move(s));
  return out;
}

Tensor fold_inverse(const Tensor& folded, const ConvGeometry& g) {
  if (folded.rank() != g.spatial_rank() + 1 ||
      !std::equal(g.output.begin(), g.output.end(), folded.shape().begin())) {
    throw ShapeError("fold_inverse: shape " + to_string(folded.shape()) + " does not match geometry output");
  }
  Tensor out(folded);
  out.reshape({g.positions, folded.shape().back()});
  return out;
}

Tensor conv_forward(const Tensor& a, const Tensor& weight, const Tensor& bias,
                    const ConvGeometry& g) {
  const Shape in_shape = g.input_shape();
  if (a.rank() != in_shape.size() + 1 || !std::equal(in_shape.begin(), in_shape.end(), a.shape().begin() + 1)) {
    throw ShapeError("conv_forward: batch shape " + to_string(a.shape()) + " does not match (B," +
                     to_string(in_shape) + ")");
  }
  if (weight.shape() != Shape{g.patch_size, g.out_channels}) {
    throw ShapeError("conv_forward: weight must be D×p = " + std::to_string(g.patch_size) + "x" +
                     std::to_string(g.out_channels));
  }
  if (!bias.empty() && bias.size() != g.out_channels) throw ShapeError("conv_forward: bias length");
  const std::size_t batch = a.dim(0);
  Tensor cols({batch, g.positions, g.patch_size});
  for (std::size_t i = 0; i < batch; ++i) unfold_into(a.outer(i), g, cols.slice(i));
  Shape out_shape{batch};
  for (std::size_t v : g.output_shape()) out_shape.push_back(v);
  Tensor out(out_shape);
  MatrixView flat{out.data(), batch * g.positions, g.out_channels, g.out_channels};
  ConstMatrixView cols_flat{cols.data(), batch * g.positions, g.patch_size, g.patch_size};
  gemm(cols_flat, Trans::No, weight.matrix(), Trans::No, flat);
  if (!bias.empty()) {
    for (std::size_t r = 0; r < flat.rows; ++r)
      for (std::size_t o = 0; o < g.out_channels; ++o) flat(r, o) += bias[o];
    counters::add_mul_adds(flat.rows * g.out_channels);
  }
  return out;
}

namespace testing {
void set_corrupt_unfold(bool enabled) { g_corrupt_unfold.store(enabled); }
bool corrupt_unfold() { return g_corrupt_unfold.load(); }
}  // namespace testing

}  // namespace dpclip::conv

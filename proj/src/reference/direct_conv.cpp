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

#include <string>

#include "dpclip/errors.hpp"
#include "dpclip/reference.hpp"

namespace dpclip::reference {
namespace {

// Advances a row-major multi-index; false after the last one.
bool next_index(std::vector<std::size_t>& idx, const Shape& extents) {
  for (std::size_t j = extents.size(); j-- > 0;) {
    if (++idx[j] < extents[j]) return true;
    idx[j] = 0;
  }
  return false;
}

// Linear spatial index of the input tap, or -1 inside the padding.
long tap(const conv::ConvGeometry& g, const std::vector<std::size_t>& out, const std::vector<std::size_t>& k) {
  long linear = 0;
  for (std::size_t j = 0; j < g.spatial_rank(); ++j) {
    const long pos = static_cast<long>(out[j] * g.stride[j] + k[j] * g.dilation[j]) - static_cast<long>(g.padding[j]);
    if (pos < 0 || pos >= static_cast<long>(g.input[j])) return -1;
    linear = linear * static_cast<long>(g.input[j]) + pos;
  }
  return linear;
}

}  // namespace

Tensor direct_conv(const Tensor& batch, const Tensor& weight, const Tensor& bias, const conv::ConvGeometry& g) {
  const std::size_t d = g.in_channels;
  const std::size_t p = g.out_channels;
  const std::size_t kv = g.kernel_volume();
  if (batch.rank() < 2 || batch.size() % g.input_volume() != 0) throw ShapeError("direct_conv: bad input");
  if (weight.rank() != 2 || weight.dim(0) != g.patch_size || weight.dim(1) != p) {
    throw ShapeError("direct_conv: weight must be D×p");
  }
  const std::size_t B = batch.dim(0);
  Shape out_shape{B};
  for (std::size_t v : g.output_shape()) out_shape.push_back(v);
  Tensor out(out_shape);
  const std::size_t in_vol = g.input_volume();
  for (std::size_t b = 0; b < B; ++b) {
    const double* x = batch.data() + b * in_vol;
    double* y = out.data() + b * g.positions * p;
    std::vector<std::size_t> o(g.spatial_rank(), 0);
    std::size_t t = 0;
    do {
      for (std::size_t oc = 0; oc < p; ++oc) {
        double acc = bias.empty() ? 0.0 : bias[oc];
        for (std::size_t c = 0; c < d; ++c) {
          std::vector<std::size_t> k(g.spatial_rank(), 0);
          std::size_t kk = 0;
          do {
            const long in = tap(g, o, k);
            if (in >= 0) acc += x[static_cast<std::size_t>(in) * d + c] * weight.at(c * kv + kk, oc);
            ++kk;
          } while (next_index(k, g.kernel));
        }
        y[t * p + oc] = acc;
      }
      ++t;
    } while (next_index(o, g.output));
  }
  return out;
}

Tensor direct_weight_grad(std::span<const double> input, std::span<const double> output_grad,
                          const conv::ConvGeometry& g) {
  const std::size_t d = g.in_channels;
  const std::size_t p = g.out_channels;
  const std::size_t kv = g.kernel_volume();
  if (input.size() != g.input_volume() || output_grad.size() != g.positions * p) {
    throw ShapeError("direct_weight_grad: sizes do not match the geometry");
  }
  Tensor grad({g.patch_size, p});
  std::vector<std::size_t> o(g.spatial_rank(), 0);
  std::size_t t = 0;
  do {
    for (std::size_t c = 0; c < d; ++c) {
      std::vector<std::size_t> k(g.spatial_rank(), 0);
      std::size_t kk = 0;
      do {
        const long in = tap(g, o, k);
        if (in >= 0) {
          const double a = input[static_cast<std::size_t>(in) * d + c];
          for (std::size_t oc = 0; oc < p; ++oc) grad.at(c * kv + kk, oc) += a * output_grad[t * p + oc];
        }
        ++kk;
      } while (next_index(k, g.kernel));
    }
    ++t;
  } while (next_index(o, g.output));
  return grad;
}

}  // namespace dpclip::reference

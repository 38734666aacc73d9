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

#include <cmath>

#include "dpclip/errors.hpp"
#include "dpclip/reference.hpp"

namespace dpclip::reference {
namespace {

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) { return lo + static_cast<std::size_t>(rng.below(hi - lo + 1)); }

Shape spatial_of(const Shape& per_sample) { return Shape(per_sample.begin(), per_sample.end() - 1); }

// Random conv hyper-parameters that fit `input`; falls back to a 1-wide kernel.
void random_conv(Rng& rng, ArchBuilder& b, std::size_t out_channels, bool bias) {
  const Shape in = spatial_of(b.current_shape());
  const std::size_t rank = in.size();
  for (int attempt = 0; attempt < 32; ++attempt) {
    Shape k(rank), s(rank), p(rank), d(rank);
    bool ok = true;
    for (std::size_t j = 0; j < rank; ++j) {
      k[j] = pick(rng, 1, 3);
      s[j] = pick(rng, 1, 2);
      p[j] = pick(rng, 0, 1);
      d[j] = pick(rng, 1, 2);
      if (in[j] + 2 * p[j] < d[j] * (k[j] - 1) + 1) ok = false;
    }
    if (!ok) continue;
    b.conv(out_channels, k, s, p, d, bias);
    return;
  }
  b.conv(out_channels, Shape(rank, 1), {}, {}, {}, bias);
}

}  // namespace

conv::ConvGeometry random_geometry(Rng& rng, std::size_t rank, const GeometryLimits& limits) {
  if (rank == 0) rank = pick(rng, 1, limits.max_rank);
  const std::size_t max_in = rank == 1 ? 12 : rank == 2 ? 7 : 4;
  for (;;) {
    Shape in(rank), k(rank), s(rank), p(rank), d(rank);
    for (std::size_t j = 0; j < rank; ++j) {
      in[j] = pick(rng, 1, max_in);
      k[j] = pick(rng, 1, 3);
      s[j] = pick(rng, 1, limits.max_stride);
      p[j] = pick(rng, 0, limits.max_padding);
      d[j] = pick(rng, 1, limits.max_dilation);
    }
    try {
      return conv::ConvGeometry::make(pick(rng, 1, limits.max_channels), pick(rng, 1, limits.max_channels), in,
                                      k, s, p, d);
    } catch (const GeometryError&) {
      // redraw
    }
  }
}

ArchSpec random_arch(Rng& rng) {
  const std::size_t rank = pick(rng, 0, 3);
  const std::size_t classes = pick(rng, 2, 4);
  std::size_t trainable = 0;
  if (rank == 0) {
    ArchBuilder b(Shape{pick(rng, 3, 12)});
    const std::size_t hidden = pick(rng, 0, 3);
    for (std::size_t h = 0; h < hidden; ++h) {
      b.linear(pick(rng, 2, 8), rng.below(5) != 0);
      b.relu();
    }
    b.linear(classes, rng.below(5) != 0);
    return b.build();
  }
  const std::size_t side = rank == 1 ? pick(rng, 6, 16) : rank == 2 ? pick(rng, 4, 9) : pick(rng, 3, 5);
  Shape input(rank, side);
  if (rank > 1 && rng.below(2)) input[0] = pick(rng, 3, side);
  input.push_back(pick(rng, 1, 3));
  ArchBuilder b(input);
  const std::size_t convs = pick(rng, 1, 3);
  for (std::size_t c = 0; c < convs; ++c) {
    random_conv(rng, b, pick(rng, 1, 4), rng.below(5) != 0);
    ++trainable;
    if (rng.below(10) < 7) b.relu();
    const Shape sp = spatial_of(b.current_shape());
    bool poolable = true;
    for (std::size_t v : sp) poolable = poolable && v >= 2;
    if (poolable && rng.below(10) < 4) {
      const Shape window(sp.size(), 2);
      if (rng.below(2)) {
        b.maxpool(window);
      } else {
        b.avgpool(window);
      }
    }
  }
  b.flatten();
  if (trainable < 3 && rng.below(2)) {
    b.linear(pick(rng, 2, 6), rng.below(5) != 0);
    b.relu();
  }
  b.linear(classes, rng.below(5) != 0);
  return b.build();
}

Batch random_batch(const ArchSpec& arch, std::size_t batch, Rng& rng) {
  Shape shape{batch};
  for (std::size_t v : arch.input) shape.push_back(v);
  Batch out{gaussian(rng, shape), {}};
  for (std::size_t i = 0; i < batch; ++i) out.labels.push_back(static_cast<std::size_t>(rng.below(arch.classes)));
  return out;
}

ParamSet random_params(const ArchSpec& arch, Rng& rng) {
  ParamSet out = ParamSet::zeros_like(arch);
  for (LayerParams& lp : out.layers) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(lp.weight.dim(0)));
    for (double& v : lp.weight.values()) v = scale * rng.gaussian();
    for (double& v : lp.bias.values()) v = 0.5 * rng.gaussian();
  }
  return out;
}

std::vector<ParamSet> per_sample_grads(const ArchSpec& arch, const ParamSet& params, const Batch& batch) {
  std::vector<ParamSet> out;
  const std::vector<double> unit{1.0};
  for (std::size_t i = 0; i < batch.size(); ++i) {
    BatchCache cache = forward(arch, params, batch.slice(i, i + 1));
    out.push_back(backward(arch, params, cache, unit, false));
  }
  return out;
}

ParamSet finite_difference_grad(const ArchSpec& arch, const ParamSet& params, const Batch& batch,
                                std::span<const double> weights, double step) {
  if (weights.size() != batch.size()) throw ShapeError("finite_difference_grad: one weight per sample");
  auto loss = [&](const ParamSet& p) {
    const ForwardResult r = evaluate(arch, p, batch);
    double total = 0.0;
    for (std::size_t i = 0; i < r.losses.size(); ++i) total += weights[i] * r.losses[i];
    return total;
  };
  ParamSet probe = params;
  ParamSet out = ParamSet::zeros_like(arch);
  auto dst = out.tensors();
  auto src = probe.tensors();
  for (std::size_t j = 0; j < src.size(); ++j) {
    for (std::size_t i = 0; i < src[j]->size(); ++i) {
      const double saved = (*src[j])[i];
      (*src[j])[i] = saved + step;
      const double up = loss(probe);
      (*src[j])[i] = saved - step;
      const double down = loss(probe);
      (*src[j])[i] = saved;
      (*dst[j])[i] = (up - down) / (2.0 * step);
    }
  }
  return out;
}

}  // namespace dpclip::reference

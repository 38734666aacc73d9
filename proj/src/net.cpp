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

#include "dpclip/net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dpclip/counters.hpp"
#include "dpclip/errors.hpp"

namespace dpclip {
namespace {

Shape batched(std::size_t batch, const Shape& per_sample) {
  Shape s{batch};
  s.insert(s.end(), per_sample.begin(), per_sample.end());
  return s;
}

// For each output position of a pool, the spatial linear indices of its window.
std::vector<std::vector<std::size_t>> pool_windows(const PoolGeometry& g) {
  const std::size_t rank = g.input.size();
  const std::size_t outs = numel(g.output);
  const std::size_t wv = numel(g.window);
  std::vector<std::vector<std::size_t>> out(outs, std::vector<std::size_t>(wv));
  std::vector<std::size_t> oc(rank), wc(rank);
  for (std::size_t o = 0; o < outs; ++o) {
    std::size_t rem = o;
    for (std::size_t j = rank; j-- > 0;) {
      oc[j] = rem % g.output[j];
      rem /= g.output[j];
    }
    for (std::size_t w = 0; w < wv; ++w) {
      std::size_t r = w;
      for (std::size_t j = rank; j-- > 0;) {
        wc[j] = r % g.window[j];
        r /= g.window[j];
      }
      std::size_t linear = 0;
      for (std::size_t j = 0; j < rank; ++j) linear = linear * g.input[j] + oc[j] * g.stride[j] + wc[j];
      out[o][w] = linear;
    }
  }
  return out;
}

void check_params(const ArchSpec& arch, const ParamSet& params) {
  const auto trainable = arch.trainable_layers();
  if (params.layers.size() != trainable.size()) {
    throw ShapeError("parameter set has " + std::to_string(params.layers.size()) + " layers, network has " +
                     std::to_string(trainable.size()));
  }
  for (std::size_t k = 0; k < trainable.size(); ++k) {
    const LayerSpec& layer = arch.layers[trainable[k]];
    const LayerParams& lp = params.layers[k];
    if (lp.weight.shape() != Shape{layer.patch_size(), layer.outputs()}) {
      throw ShapeError(layer.name + ": weight shape " + to_string(lp.weight.shape()));
    }
    if (layer.bias != !lp.bias.empty() || (layer.bias && lp.bias.size() != layer.outputs())) {
      throw ShapeError(layer.name + ": bias does not match the layer spec");
    }
  }
}

void add_bias(MatrixView out, const Tensor& bias) {
  if (bias.empty()) return;
  for (std::size_t r = 0; r < out.rows; ++r) {
    double* row = out.row(r);
    for (std::size_t o = 0; o < out.cols; ++o) row[o] += bias[o];
  }
  counters::add_mul_adds(out.rows * out.cols);
}

double cross_entropy(const double* logits, std::size_t classes, std::size_t label) {
  const double m = *std::max_element(logits, logits + classes);
  double s = 0.0;
  for (std::size_t c = 0; c < classes; ++c) s += std::exp(logits[c] - m);
  return m + std::log(s) - logits[label];
}

}  // namespace

ParamSet ParamSet::zeros_like(const ArchSpec& arch) {
  ParamSet out;
  for (std::size_t idx : arch.trainable_layers()) {
    const LayerSpec& layer = arch.layers[idx];
    LayerParams lp;
    lp.weight = Tensor({layer.patch_size(), layer.outputs()});
    if (layer.bias) lp.bias = Tensor({layer.outputs()});
    out.layers.push_back(std::move(lp));
  }
  return out;
}

std::size_t ParamSet::count() const {
  std::size_t n = 0;
  for (const Tensor* t : tensors()) n += t->size();
  return n;
}

std::vector<Tensor*> ParamSet::tensors() {
  std::vector<Tensor*> out;
  for (LayerParams& lp : layers) {
    out.push_back(&lp.weight);
    if (!lp.bias.empty()) out.push_back(&lp.bias);
  }
  return out;
}

std::vector<const Tensor*> ParamSet::tensors() const {
  std::vector<const Tensor*> out;
  for (const LayerParams& lp : layers) {
    out.push_back(&lp.weight);
    if (!lp.bias.empty()) out.push_back(&lp.bias);
  }
  return out;
}

ParamSet init_params(const ArchSpec& arch, Rng& rng) {
  ParamSet p = ParamSet::zeros_like(arch);
  for (LayerParams& lp : p.layers) {
    const double std_dev = std::sqrt(2.0 / static_cast<double>(lp.weight.dim(0)));
    for (double& v : lp.weight.values()) v = std_dev * rng.gaussian();
  }
  return p;
}

void add_scaled(ParamSet& dst, double alpha, const ParamSet& src) {
  auto d = dst.tensors();
  auto s = src.tensors();
  if (d.size() != s.size()) throw ShapeError("add_scaled: parameter sets differ in layout");
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i]->shape() != s[i]->shape()) throw ShapeError("add_scaled: tensor shape mismatch");
    axpy(alpha, s[i]->values(), d[i]->values());
  }
}

double squared_norm(const ParamSet& p) {
  double s = 0.0;
  for (const Tensor* t : p.tensors())
    for (double v : t->values()) s += v * v;
  return s;
}

double relative_difference(const ParamSet& a, const ParamSet& b) {
  auto ta = a.tensors();
  auto tb = b.tensors();
  if (ta.size() != tb.size()) throw ShapeError("relative_difference: layouts differ");
  double diff = 0.0;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (ta[i]->shape() != tb[i]->shape()) throw ShapeError("relative_difference: shapes differ");
    for (std::size_t j = 0; j < ta[i]->size(); ++j) {
      const double d = (*ta[i])[j] - (*tb[i])[j];
      diff += d * d;
    }
  }
  const double scale = std::max(squared_norm(a), squared_norm(b));
  return scale == 0.0 ? std::sqrt(diff) : std::sqrt(diff / scale);
}

bool bit_equal(const ParamSet& a, const ParamSet& b) {
  auto ta = a.tensors();
  auto tb = b.tensors();
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (ta[i]->shape() != tb[i]->shape()) return false;
    if (!std::equal(ta[i]->values().begin(), ta[i]->values().end(), tb[i]->values().begin())) return false;
  }
  return true;
}

Batch Batch::slice(std::size_t begin, std::size_t end) const {
  if (begin >= end || end > size()) throw ShapeError("Batch::slice: empty or out-of-range slice");
  std::vector<std::size_t> idx(end - begin);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = begin + i;
  return gather(idx);
}

Batch Batch::gather(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw ShapeError("Batch::gather: no indices");
  Shape s = inputs.shape();
  s[0] = indices.size();
  Batch out{Tensor(s), {}};
  const std::size_t block = inputs.size() / inputs.dim(0);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto src = inputs.outer(indices[i]);
    std::copy(src.begin(), src.end(), out.inputs.data() + i * block);
    out.labels.push_back(labels.at(indices[i]));
  }
  return out;
}

void BatchCache::release() {
  captures.clear();
  relu_inputs.clear();
  pool_argmax.clear();
  logits.release();
  has_output_grads = false;
}

BatchCache forward(const ArchSpec& arch, const ParamSet& params, const Batch& batch) {
  check_params(arch, params);
  const std::size_t B = batch.size();
  if (B == 0) throw ShapeError("forward: empty batch");
  if (batch.inputs.shape() != batched(B, arch.input)) {
    throw ShapeError("forward: batch shape " + to_string(batch.inputs.shape()) + ", network expects " +
                     to_string(batched(B, arch.input)));
  }
  for (std::size_t y : batch.labels) {
    if (y >= arch.classes) throw ShapeError("forward: label " + std::to_string(y) + " out of range");
  }

  BatchCache cache;
  cache.labels = batch.labels;
  cache.captures.resize(params.layers.size());
  cache.relu_inputs.resize(arch.layers.size());
  cache.pool_argmax.resize(arch.layers.size());

  Tensor x = batch.inputs;
  std::size_t k = 0;
  for (std::size_t l = 0; l < arch.layers.size(); ++l) {
    const LayerSpec& layer = arch.layers[l];
    switch (layer.kind) {
      case LayerKind::Conv: {
        const conv::ConvGeometry& g = layer.conv;
        Tensor cols({B, g.positions, g.patch_size});
        for (std::size_t i = 0; i < B; ++i) conv::unfold_into(x.outer(i), g, cols.slice(i));
        x.release();
        Tensor out(batched(B, layer.out_shape));
        MatrixView flat{out.data(), B * g.positions, g.out_channels, g.out_channels};
        gemm({cols.data(), B * g.positions, g.patch_size, g.patch_size}, Trans::No,
             params.layers[k].weight.matrix(), Trans::No, flat);
        add_bias(flat, params.layers[k].bias);
        cache.captures[k].activations = std::move(cols);
        x = std::move(out);
        ++k;
        break;
      }
      case LayerKind::Linear: {
        Tensor out({B, layer.out_features});
        gemm(x.matrix(), Trans::No, params.layers[k].weight.matrix(), Trans::No, out.matrix());
        add_bias(out.matrix(), params.layers[k].bias);
        x.reshape({B, 1, layer.in_features});
        cache.captures[k].activations = std::move(x);
        x = std::move(out);
        ++k;
        break;
      }
      case LayerKind::ReLU: {
        cache.relu_inputs[l] = x;
        for (double& v : x.values()) v = v > 0.0 ? v : 0.0;
        break;
      }
      case LayerKind::MaxPool:
      case LayerKind::AvgPool: {
        const PoolGeometry& g = layer.pool;
        const auto windows = pool_windows(g);
        const std::size_t c = g.channels;
        const std::size_t in_block = numel(g.input) * c;
        const std::size_t out_block = windows.size() * c;
        Tensor out(batched(B, layer.out_shape));
        const bool is_max = layer.kind == LayerKind::MaxPool;
        std::vector<std::size_t>& argmax = cache.pool_argmax[l];
        if (is_max) argmax.assign(B * out_block, 0);
        const double inv = 1.0 / static_cast<double>(numel(g.window));
        for (std::size_t i = 0; i < B; ++i) {
          const double* src = x.data() + i * in_block;
          double* dst = out.data() + i * out_block;
          for (std::size_t o = 0; o < windows.size(); ++o) {
            for (std::size_t ch = 0; ch < c; ++ch) {
              if (is_max) {
                std::size_t best = windows[o][0] * c + ch;
                for (std::size_t w = 1; w < windows[o].size(); ++w) {
                  const std::size_t idx = windows[o][w] * c + ch;
                  if (src[idx] > src[best]) best = idx;  // first maximum wins ties
                }
                dst[o * c + ch] = src[best];
                argmax[i * out_block + o * c + ch] = best;
              } else {
                double s = 0.0;
                for (std::size_t w : windows[o]) s += src[w * c + ch];
                dst[o * c + ch] = s * inv;
              }
            }
          }
        }
        if (!is_max) counters::add_mul_adds(B * out_block * numel(g.window));
        x = std::move(out);
        break;
      }
      case LayerKind::Flatten:
        x.reshape(batched(B, layer.out_shape));
        break;
    }
  }

  cache.losses.resize(B);
  for (std::size_t i = 0; i < B; ++i) {
    cache.losses[i] = cross_entropy(x.data() + i * arch.classes, arch.classes, batch.labels[i]);
  }
  cache.logits = std::move(x);
  return cache;
}

ForwardResult evaluate(const ArchSpec& arch, const ParamSet& params, const Batch& batch) {
  BatchCache cache = forward(arch, params, batch);
  return {std::move(cache.losses), std::move(cache.logits)};
}

ParamSet backward(const ArchSpec& arch, const ParamSet& params, BatchCache& cache,
                  std::span<const double> loss_weights, bool capture) {
  if (cache.logits.empty() || cache.captures.size() != params.layers.size()) {
    throw StateError("backward called without a forward pass in the cache");
  }
  const std::size_t B = cache.batch_size();
  if (loss_weights.size() != B) {
    throw ShapeError("backward: " + std::to_string(loss_weights.size()) + " loss weights for batch of " +
                     std::to_string(B));
  }
  const std::size_t classes = arch.classes;

  // ∂(Σ wᵢLᵢ)/∂zᵢ = wᵢ·(softmax(zᵢ) − onehot(yᵢ))
  Tensor grad({B, classes});
  for (std::size_t i = 0; i < B; ++i) {
    const double* z = cache.logits.data() + i * classes;
    double* g = grad.data() + i * classes;
    const double m = *std::max_element(z, z + classes);
    double s = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      g[c] = std::exp(z[c] - m);
      s += g[c];
    }
    for (std::size_t c = 0; c < classes; ++c) g[c] = loss_weights[i] * (g[c] / s - (c == cache.labels[i] ? 1.0 : 0.0));
  }

  ParamSet grads = ParamSet::zeros_like(arch);
  const auto trainable = arch.trainable_layers();
  const std::size_t first_trainable = trainable.front();
  std::size_t k = trainable.size();

  for (std::size_t l = arch.layers.size(); l-- > first_trainable;) {
    const LayerSpec& layer = arch.layers[l];
    switch (layer.kind) {
      case LayerKind::Conv:
      case LayerKind::Linear: {
        --k;
        LayerCapture& cap = cache.captures[k];
        const std::size_t T = layer.positions();
        const std::size_t D = layer.patch_size();
        const std::size_t p = layer.outputs();
        ConstMatrixView delta{grad.data(), B * T, p, p};
        ConstMatrixView cols{cap.activations.data(), B * T, D, D};
        if (capture) cap.output_grads = Tensor({B, T, p}, std::vector<double>(grad.values().begin(), grad.values().end()));
        // Σᵢ U(aᵢ)ᵀ·∂L/∂sᵢ accumulated in place, no per-sample gradient.
        gemm(cols, Trans::Yes, delta, Trans::No, grads.layers[k].weight.matrix());
        if (layer.bias) {
          Tensor& gb = grads.layers[k].bias;
          for (std::size_t r = 0; r < delta.rows; ++r)
            for (std::size_t o = 0; o < p; ++o) gb[o] += delta(r, o);
          counters::add_mul_adds((delta.rows - 1) * p);
        }
        if (l == first_trainable) break;
        Tensor dcols({B * T, D});
        gemm(delta, Trans::No, params.layers[k].weight.matrix(), Trans::Yes, dcols.matrix());
        if (layer.kind == LayerKind::Conv) {
          Tensor in_grad(batched(B, layer.in_shape));
          for (std::size_t i = 0; i < B; ++i) {
            conv::unfold_adjoint_into({dcols.data() + i * T * D, T, D, D}, layer.conv, in_grad.outer(i));
          }
          grad = std::move(in_grad);
        } else {
          dcols.reshape({B, D});
          grad = std::move(dcols);
        }
        break;
      }
      case LayerKind::ReLU: {
        const Tensor& s = cache.relu_inputs[l];
        for (std::size_t j = 0; j < grad.size(); ++j) grad[j] = s[j] > 0.0 ? grad[j] : 0.0;
        counters::add_mul_adds(grad.size());
        break;
      }
      case LayerKind::MaxPool: {
        Tensor in_grad(batched(B, layer.in_shape));
        const std::vector<std::size_t>& argmax = cache.pool_argmax[l];
        const std::size_t in_block = in_grad.size() / B;
        const std::size_t out_block = grad.size() / B;
        for (std::size_t i = 0; i < B; ++i)
          for (std::size_t o = 0; o < out_block; ++o)
            in_grad[i * in_block + argmax[i * out_block + o]] += grad[i * out_block + o];
        grad = std::move(in_grad);
        break;
      }
      case LayerKind::AvgPool: {
        const PoolGeometry& g = layer.pool;
        const auto windows = pool_windows(g);
        const std::size_t c = g.channels;
        Tensor in_grad(batched(B, layer.in_shape));
        const std::size_t in_block = in_grad.size() / B;
        const std::size_t out_block = grad.size() / B;
        const double inv = 1.0 / static_cast<double>(numel(g.window));
        for (std::size_t i = 0; i < B; ++i)
          for (std::size_t o = 0; o < windows.size(); ++o)
            for (std::size_t ch = 0; ch < c; ++ch) {
              const double share = grad[i * out_block + o * c + ch] * inv;
              for (std::size_t w : windows[o]) in_grad[i * in_block + w * c + ch] += share;
            }
        counters::add_mul_adds(B * out_block * (numel(g.window) + 1));
        grad = std::move(in_grad);
        break;
      }
      case LayerKind::Flatten:
        grad.reshape(batched(B, layer.in_shape));
        break;
    }
  }
  cache.has_output_grads = capture;
  return grads;
}

ParamSet backward(const ArchSpec& arch, const ParamSet& params, BatchCache& cache) {
  const std::vector<double> ones(cache.batch_size(), 1.0);
  return backward(arch, params, cache, ones, true);
}

ParamSet second_backward(const ArchSpec& arch, const ParamSet& params, const Batch& batch,
                         std::span<const double> weights) {
  if (weights.size() != batch.size()) {
    throw ShapeError("second_backward: " + std::to_string(weights.size()) + " weights for batch of " +
                     std::to_string(batch.size()));
  }
  for (double w : weights) {
    if (!std::isfinite(w)) throw NumericError("second_backward: non-finite loss weight");
  }
  BatchCache cache = forward(arch, params, batch);
  return backward(arch, params, cache, weights, false);
}

double accuracy(const Tensor& logits, std::span<const std::size_t> labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size()) throw ShapeError("accuracy: shape mismatch");
  const std::size_t classes = logits.dim(1);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double* z = logits.data() + i * classes;
    const std::size_t pred = static_cast<std::size_t>(std::max_element(z, z + classes) - z);
    hits += pred == labels[i];
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace dpclip

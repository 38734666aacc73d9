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

#include "dpclip/clip.hpp"

#include <cmath>
#include <optional>

#include "dpclip/counters.hpp"
#include "dpclip/errors.hpp"

namespace dpclip::clip {
namespace {

using u128 = unsigned __int128;

void check_pair(const Tensor& activations, const Tensor& output_grads, const char* op) {
  if (activations.rank() != 3 || output_grads.rank() != 3) {
    throw ShapeError(std::string(op) + ": expected B×T×D activations and B×T×p output gradients");
  }
  if (activations.dim(0) != output_grads.dim(0) || activations.dim(1) != output_grads.dim(1)) {
    throw ShapeError(std::string(op) + ": activations " + dpclip::to_string(activations.shape()) +
                     " and output gradients " + dpclip::to_string(output_grads.shape()) +
                     " disagree on batch or positions");
  }
}

Decision layer_decision(ClipMethod method, const LayerDecision& planned) {
  switch (method) {
    case ClipMethod::Ghost:
      return Decision::GhostNorm;
    case ClipMethod::Mixed:
      return planned.decision;
    default:
      return Decision::Instantiate;
  }
}

ClipResult naive(const ArchSpec& arch, const ParamSet& params, const Batch& batch,
                 const ClipOptions& options) {
  ClipResult out;
  out.clipped_sum = ParamSet::zeros_like(arch);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Batch one = batch.slice(i, i + 1);
    BatchCache cache = forward(arch, params, one);
    const std::vector<double> unit{1.0};
    const ParamSet g = backward(arch, params, cache, unit, false);
    double sq = 0.0;
    for (const LayerParams& lp : g.layers) {
      sq += squared_norm(lp.weight);
      if (options.include_bias && !lp.bias.empty()) sq += squared_norm(lp.bias);
    }
    const double norm = std::sqrt(sq);
    const double c = options.fn.factor(norm);
    add_scaled(out.clipped_sum, c, g);
    out.norms.push_back(norm);
    out.factors.push_back(c);
    out.losses.push_back(cache.losses[0]);
  }
  return out;
}

}  // namespace

double ClipFn::factor(double norm) const {
  if (!(norm >= 0.0)) throw NumericError("clip factor of a negative or NaN norm");
  switch (kind) {
    case ClipKind::Abadi:
      return norm == 0.0 ? 1.0 : std::min(R / norm, 1.0);
    case ClipKind::Automatic:
      return R / (norm + gamma);
    case ClipKind::Global:
      return norm < R ? 1.0 : 0.0;
  }
  return 0.0;
}

double clip_factor(double norm, const ClipFn& fn) { return fn.factor(norm); }

ClipPlan decide_plan(const ArchSpec& arch, Priority priority) {
  ClipPlan plan;
  plan.priority = priority;
  for (std::size_t idx : arch.trainable_layers()) {
    const LayerSpec& layer = arch.layers[idx];
    LayerDecision d;
    d.layer = layer.name;
    d.positions = layer.positions();
    d.patch_size = layer.patch_size();
    d.outputs = layer.outputs();
    const u128 T = d.positions;
    const u128 D = d.patch_size;
    const u128 p = d.outputs;
    u128 ghost = 0;
    u128 inst = 0;
    if (priority == Priority::Memory) {
      ghost = 2 * T * T;
      inst = p * D;
    } else {
      ghost = 2 * T * T * (D + p + 1);
      inst = 2 * (T + 1) * p * D;
    }
    d.ghost_cost = static_cast<double>(ghost);
    d.instantiate_cost = static_cast<double>(inst);
    d.decision = ghost < inst ? Decision::GhostNorm : Decision::Instantiate;
    plan.layers.push_back(d);
  }
  return plan;
}

Tensor ghost_norm_layer(const Tensor& activations, const Tensor& output_grads) {
  check_pair(activations, output_grads, "ghost_norm_layer");
  const std::size_t B = activations.dim(0);
  const std::size_t T = activations.dim(1);
  Tensor gram_a({B, T, T});
  Tensor gram_g({B, T, T});
  for (std::size_t i = 0; i < B; ++i) {
    gemm(activations.slice(i), Trans::No, activations.slice(i), Trans::Yes, gram_a.slice(i));
    gemm(output_grads.slice(i), Trans::No, output_grads.slice(i), Trans::Yes, gram_g.slice(i));
  }
  Tensor norms({B});
  for (std::size_t i = 0; i < B; ++i) norms[i] = dot(gram_a.outer(i), gram_g.outer(i));
  return norms;
}

InstantiatedGrads instantiate_layer(const Tensor& activations, const Tensor& output_grads) {
  check_pair(activations, output_grads, "instantiate_layer");
  const std::size_t B = activations.dim(0);
  const std::size_t D = activations.dim(2);
  const std::size_t p = output_grads.dim(2);
  InstantiatedGrads out{Tensor({B, D, p}), Tensor()};
  for (std::size_t i = 0; i < B; ++i) {
    gemm(activations.slice(i), Trans::Yes, output_grads.slice(i), Trans::No, out.grads.slice(i));
  }
  out.sq_norms = Tensor({B});
  for (std::size_t i = 0; i < B; ++i) out.sq_norms[i] = squared_norm(out.grads.outer(i));
  return out;
}

BiasGrads bias_norms_layer(const Tensor& output_grads) {
  if (output_grads.rank() != 3) throw ShapeError("bias_norms_layer: expected B×T×p output gradients");
  const std::size_t B = output_grads.dim(0);
  const std::size_t T = output_grads.dim(1);
  const std::size_t p = output_grads.dim(2);
  BiasGrads out{Tensor({B, p}), Tensor({B})};
  for (std::size_t i = 0; i < B; ++i) {
    const ConstMatrixView g = output_grads.slice(i);
    double* dst = out.grads.data() + i * p;
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t o = 0; o < p; ++o) dst[o] += g(t, o);
    out.sq_norms[i] = squared_norm(std::span<const double>(dst, p));
  }
  counters::add_mul_adds(B * (T - 1) * p);
  return out;
}

ClipResult clipped_gradient(const ArchSpec& arch, const ParamSet& params, const Batch& batch,
                            ClipMethod method, const ClipOptions& options) {
  if (batch.size() == 0) throw ShapeError("clipped_gradient: empty batch");
  if (method == ClipMethod::Naive) return naive(arch, params, batch, options);

  const std::size_t B = batch.size();
  const ClipPlan plan = decide_plan(arch, options.priority);
  const auto trainable = arch.trainable_layers();

  BatchCache cache = forward(arch, params, batch);
  backward(arch, params, cache);

  ClipResult out;
  out.losses = cache.losses;
  std::vector<double> sq(B, 0.0);
  // Instantiate keeps every layer's per-sample gradients until the weighted sum.
  std::vector<std::optional<Tensor>> kept_weight(trainable.size());
  std::vector<std::optional<Tensor>> kept_bias(trainable.size());

  for (std::size_t k = 0; k < trainable.size(); ++k) {
    const LayerSpec& layer = arch.layers[trainable[k]];
    const LayerCapture& cap = cache.captures[k];
    if (layer_decision(method, plan.layers[k]) == Decision::GhostNorm) {
      const Tensor norms = ghost_norm_layer(cap.activations, cap.output_grads);
      for (std::size_t i = 0; i < B; ++i) sq[i] += norms[i];
    } else {
      InstantiatedGrads inst = instantiate_layer(cap.activations, cap.output_grads);
      for (std::size_t i = 0; i < B; ++i) sq[i] += inst.sq_norms[i];
      if (method == ClipMethod::Instantiate) kept_weight[k] = std::move(inst.grads);
    }
    if (layer.bias) {
      BiasGrads bg = bias_norms_layer(cap.output_grads);
      if (options.include_bias)
        for (std::size_t i = 0; i < B; ++i) sq[i] += bg.sq_norms[i];
      if (method == ClipMethod::Instantiate) kept_bias[k] = std::move(bg.grads);
    }
  }

  for (std::size_t i = 0; i < B; ++i) {
    const double norm = std::sqrt(sq[i]);
    out.norms.push_back(norm);
    out.factors.push_back(options.fn.factor(norm));
  }
  cache.release();

  if (method == ClipMethod::Instantiate) {
    out.clipped_sum = ParamSet::zeros_like(arch);
    for (std::size_t k = 0; k < trainable.size(); ++k) {
      LayerParams& dst = out.clipped_sum.layers[k];
      for (std::size_t i = 0; i < B; ++i) {
        axpy(out.factors[i], kept_weight[k]->outer(i), dst.weight.values());
        if (kept_bias[k]) axpy(out.factors[i], kept_bias[k]->outer(i), dst.bias.values());
      }
      kept_weight[k].reset();
      kept_bias[k].reset();
    }
  } else {
    out.clipped_sum = second_backward(arch, params, batch, out.factors);
  }
  return out;
}

std::string to_string(ClipMethod m) {
  switch (m) {
    case ClipMethod::Naive:
      return "naive";
    case ClipMethod::Instantiate:
      return "instantiate";
    case ClipMethod::SecondPass:
      return "secondpass";
    case ClipMethod::Ghost:
      return "ghost";
    case ClipMethod::Mixed:
      return "mixed";
  }
  return "?";
}

std::string to_string(ClipKind k) {
  switch (k) {
    case ClipKind::Abadi:
      return "abadi";
    case ClipKind::Automatic:
      return "automatic";
    case ClipKind::Global:
      return "global";
  }
  return "?";
}

std::string to_string(Decision d) { return d == Decision::GhostNorm ? "ghost" : "instantiate"; }

std::string to_string(Priority p) { return p == Priority::Memory ? "memory" : "speed"; }

ClipMethod parse_method(const std::string& s) {
  if (s == "naive") return ClipMethod::Naive;
  if (s == "instantiate" || s == "opacus") return ClipMethod::Instantiate;
  if (s == "secondpass" || s == "fastgradclip") return ClipMethod::SecondPass;
  if (s == "ghost") return ClipMethod::Ghost;
  if (s == "mixed") return ClipMethod::Mixed;
  throw ParseError("unknown clipping method '" + s + "'");
}

ClipKind parse_clip_kind(const std::string& s) {
  if (s == "abadi") return ClipKind::Abadi;
  if (s == "automatic") return ClipKind::Automatic;
  if (s == "global") return ClipKind::Global;
  throw ParseError("unknown clipping function '" + s + "'");
}

Priority parse_priority(const std::string& s) {
  if (s == "memory") return Priority::Memory;
  if (s == "speed") return Priority::Speed;
  throw ParseError("unknown priority '" + s + "'");
}

}  // namespace dpclip::clip

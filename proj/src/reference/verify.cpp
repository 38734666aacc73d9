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

#include "dpclip/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dpclip/clip.hpp"
#include "dpclip/costmodel.hpp"
#include "dpclip/counters.hpp"
#include "dpclip/data.hpp"
#include "dpclip/dp.hpp"
#include "dpclip/reference.hpp"
#include "dpclip/train.hpp"

namespace dpclip::verify {
namespace {

constexpr clip::ClipMethod kEngines[] = {clip::ClipMethod::Instantiate, clip::ClipMethod::SecondPass,
                                         clip::ClipMethod::Ghost, clip::ClipMethod::Mixed};
constexpr clip::ClipKind kKinds[] = {clip::ClipKind::Abadi, clip::ClipKind::Automatic, clip::ClipKind::Global};

std::string sci(double v) {
  std::ostringstream s;
  s.precision(3);
  s << std::scientific << v;
  return s.str();
}

double rel_err(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

// Threshold halfway between the two middle norms, so no sample sits on it.
double split_threshold(std::vector<double> norms) {
  std::sort(norms.begin(), norms.end());
  const std::size_t mid = norms.size() / 2;
  if (norms.size() < 2) return norms.empty() ? 1.0 : norms[0] * 2.0 + 1.0;
  return 0.5 * (norms[mid - 1] + norms[mid]);
}

// Worst relative difference of every engine against the per-sample loop.
struct Compare {
  double worst = 0.0;
  std::string where;
};

void compare_methods(const ArchSpec& arch, const ParamSet& params, const Batch& batch, const std::string& tag,
                     Compare& cmp) {
  clip::ClipOptions probe;
  const auto base_norms = clip::clipped_gradient(arch, params, batch, clip::ClipMethod::Naive, probe).norms;
  const double R = split_threshold(base_norms);
  for (clip::ClipKind kind : kKinds) {
    clip::ClipOptions opt;
    opt.fn.kind = kind;
    opt.fn.R = R;
    const clip::ClipResult oracle = clip::clipped_gradient(arch, params, batch, clip::ClipMethod::Naive, opt);
    for (clip::ClipMethod m : kEngines) {
      const clip::ClipResult r = clip::clipped_gradient(arch, params, batch, m, opt);
      double err = relative_difference(r.clipped_sum, oracle.clipped_sum);
      for (std::size_t i = 0; i < r.norms.size(); ++i) err = std::max(err, rel_err(r.norms[i], oracle.norms[i]));
      if (err >= cmp.worst) {
        cmp.worst = err;
        cmp.where = tag + " " + clip::to_string(kind) + " " + clip::to_string(m);
      }
    }
  }
}

Tensor unfold_batch(const Tensor& x, const conv::ConvGeometry& g) {
  const std::size_t B = x.dim(0);
  Tensor cols({B, g.positions, g.patch_size});
  for (std::size_t i = 0; i < B; ++i) conv::unfold_into(x.outer(i), g, cols.slice(i));
  return cols;
}

Shape batched(std::size_t B, const Shape& s) {
  Shape out{B};
  out.insert(out.end(), s.begin(), s.end());
  return out;
}

double tensor_rel(const Tensor& a, const Tensor& b) {
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += (a[i] - b[i]) * (a[i] - b[i]);
  const double scale = std::max(squared_norm(a), squared_norm(b));
  return scale == 0.0 ? std::sqrt(diff) : std::sqrt(diff / scale);
}

std::vector<ArchSpec> gradient_check_archs() {
  std::vector<ArchSpec> out;
  out.push_back(ArchBuilder({10, 2})
                    .conv(3, {3}, {1}, {1})
                    .relu()
                    .maxpool({2})
                    .conv(4, {2}, {2}, {0}, {1})
                    .relu()
                    .avgpool({2})
                    .flatten()
                    .linear(3)
                    .build());
  out.push_back(ArchBuilder({6, 5, 2})
                    .conv(3, {3, 3}, {1, 1}, {1, 1})
                    .relu()
                    .maxpool({2, 2})
                    .conv(2, {2, 1}, {1, 1}, {0, 0}, {1, 1}, false)
                    .avgpool({2, 2})
                    .flatten()
                    .linear(4)
                    .relu()
                    .linear(3)
                    .build());
  out.push_back(ArchBuilder({4, 4, 3, 1})
                    .conv(2, {2, 2, 2}, {1, 1, 1}, {1, 1, 1}, {2, 2, 1})
                    .relu()
                    .maxpool({2, 2, 2})
                    .flatten()
                    .linear(3)
                    .build());
  out.push_back(ArchBuilder({5}).linear(4).relu().linear(3, false).relu().linear(3).build());
  return out;
}

}  // namespace

CheckResult clip_equivalence(std::uint64_t seed, std::size_t networks, double tol) {
  Rng rng(derive_seed(seed, 101));
  Compare cmp;
  for (std::size_t n = 0; n < networks; ++n) {
    const ArchSpec arch = reference::random_arch(rng);
    const std::size_t B = 4 + static_cast<std::size_t>(rng.below(13));
    const ParamSet params = reference::random_params(arch, rng);
    const Batch batch = reference::random_batch(arch, B, rng);
    compare_methods(arch, params, batch, "net " + std::to_string(n), cmp);
  }
  return {"clip_equivalence", cmp.worst <= tol,
          std::to_string(networks) + " random nets x 3 clip fns x 4 engines, worst rel diff " + sci(cmp.worst) +
              " at " + cmp.where + " (tol " + sci(tol) + ")"};
}

CheckResult ghost_vs_instantiate(std::uint64_t seed, std::size_t configs, double tol) {
  Rng rng(derive_seed(seed, 102));
  double worst_ghost = 0.0;
  double worst_inst = 0.0;
  for (std::size_t c = 0; c < configs; ++c) {
    const conv::ConvGeometry g = reference::random_geometry(rng);
    const std::size_t B = 1 + static_cast<std::size_t>(rng.below(4));
    const Tensor x = gaussian(rng, batched(B, g.input_shape()));
    const Tensor delta = gaussian(rng, {B, g.positions, g.out_channels});
    const Tensor cols = unfold_batch(x, g);
    const Tensor ghost = clip::ghost_norm_layer(cols, delta);
    const clip::InstantiatedGrads inst = clip::instantiate_layer(cols, delta);
    for (std::size_t i = 0; i < B; ++i) {
      const double direct = squared_norm(reference::direct_weight_grad(x.outer(i), delta.outer(i), g));
      worst_ghost = std::max(worst_ghost, rel_err(ghost[i], direct));
      worst_inst = std::max(worst_inst, rel_err(inst.sq_norms[i], direct));
    }
  }
  const bool pass = worst_ghost <= tol && worst_inst <= tol;
  return {"ghost_vs_instantiate", pass,
          std::to_string(configs) + " geometries, worst rel err vs loop oracle: ghost " + sci(worst_ghost) +
              ", instantiate " + sci(worst_inst) + " (tol " + sci(tol) + ")"};
}

CheckResult conv_oracle(std::uint64_t seed, std::size_t geometries, double tol) {
  Rng rng(derive_seed(seed, 103));
  double worst = 0.0;
  for (std::size_t n = 0; n < geometries; ++n) {
    const conv::ConvGeometry g = reference::random_geometry(rng);
    const Tensor x = gaussian(rng, batched(2, g.input_shape()));
    const Tensor w = gaussian(rng, {g.patch_size, g.out_channels});
    const Tensor b = gaussian(rng, {g.out_channels});
    worst = std::max(worst, max_abs_diff(conv::conv_forward(x, w, b, g), reference::direct_conv(x, w, b, g)));
  }
  return {"conv_oracle", worst <= tol,
          std::to_string(geometries) + " geometries, worst abs diff " + sci(worst) + " (tol " + sci(tol) + ")"};
}

CheckResult finite_differences(std::uint64_t seed, double step, double tol) {
  Rng rng(derive_seed(seed, 104));
  double worst = 0.0;
  std::string where;
  for (const ArchSpec& arch : gradient_check_archs()) {
    const ParamSet params = reference::random_params(arch, rng);
    const Batch batch = reference::random_batch(arch, 3, rng);
    std::vector<double> w(batch.size());
    for (double& v : w) v = rng.uniform(0.5, 1.5);
    BatchCache cache = forward(arch, params, batch);
    const ParamSet analytic = backward(arch, params, cache, w, false);
    const ParamSet numeric = reference::finite_difference_grad(arch, params, batch, w, step);
    const auto trainable = arch.trainable_layers();
    for (std::size_t k = 0; k < trainable.size(); ++k) {
      const LayerSpec& layer = arch.layers[trainable[k]];
      double err = tensor_rel(analytic.layers[k].weight, numeric.layers[k].weight);
      if (!analytic.layers[k].bias.empty())
        err = std::max(err, tensor_rel(analytic.layers[k].bias, numeric.layers[k].bias));
      if (err >= worst) {
        worst = err;
        where = layer.name + " (" + layer.kind_name() + ")";
      }
    }
  }
  return {"finite_differences", worst <= tol,
          "conv1d/2d/3d, linear, relu, maxpool, avgpool, flatten; worst rel err " + sci(worst) + " at " + where +
              " (step " + sci(step) + ", tol " + sci(tol) + ")"};
}

CheckResult flop_model(std::uint64_t seed, std::size_t geometries) {
  Rng rng(derive_seed(seed, 105));
  std::size_t bad = 0;
  std::string first;
  for (std::size_t n = 0; n < geometries; ++n) {
    const conv::ConvGeometry g = reference::random_geometry(rng);
    const std::uint64_t B = 1 + rng.below(4);
    const std::uint64_t T = g.positions, D = g.patch_size, p = g.out_channels;
    const Tensor x = gaussian(rng, batched(B, g.input_shape()));
    const Tensor w = gaussian(rng, {D, p});
    const Tensor delta = gaussian(rng, {B, T, p});
    const Tensor cols = unfold_batch(x, g);

    std::uint64_t fwd = 0, inst = 0, ghost = 0;
    {
      counters::Scope s;
      const Tensor y = conv::conv_forward(x, w, Tensor(), g);
      fwd = s.mul_adds();
    }
    {
      counters::Scope s;
      const clip::InstantiatedGrads r = clip::instantiate_layer(cols, delta);
      inst = s.mul_adds();
    }
    {
      counters::Scope s;
      const Tensor r = clip::ghost_norm_layer(cols, delta);
      ghost = s.mul_adds();
    }
    // Norm reductions are dot products of length n counted as 2n − 1.
    const std::uint64_t want_fwd = 2 * B * T * p * D;
    const std::uint64_t want_inst = 2 * B * T * p * D + B * (2 * p * D - 1);
    const std::uint64_t want_ghost = 2 * B * T * T * (D + p) + B * (2 * T * T - 1);
    if (fwd != want_fwd || inst != want_inst || ghost != want_ghost) {
      if (bad++ == 0) {
        first = "B=" + std::to_string(B) + " T=" + std::to_string(T) + " D=" + std::to_string(D) +
                " p=" + std::to_string(p) + ": forward " + std::to_string(fwd) + "/" + std::to_string(want_fwd) +
                ", instantiate " + std::to_string(inst) + "/" + std::to_string(want_inst) + ", ghost " +
                std::to_string(ghost) + "/" + std::to_string(want_ghost);
      }
    }
  }
  return {"flop_model", bad == 0,
          bad == 0 ? std::to_string(geometries) +
                         " geometries: forward 2BTpD, instantiation 2BTpD, ghost Gram 2BT^2(D+p) all exact"
                   : std::to_string(bad) + " mismatches, first " + first};
}

CheckResult memory_ordering(std::uint64_t seed, std::size_t configs, MemoryOrderingStats* stats_out) {
  Rng rng(derive_seed(seed, 106));
  MemoryOrderingStats st;
  std::int64_t slack = 0;  // largest |measured − B(2T²+1)| or |measured − B(pD+1)|
  std::size_t considered = 0;
  for (std::size_t n = 0; n < configs; ++n) {
    const std::size_t side = 2 + static_cast<std::size_t>(rng.below(9));
    const std::size_t d = 1 + static_cast<std::size_t>(rng.below(4));
    const std::size_t p = 1 + static_cast<std::size_t>(rng.below(24));
    const std::size_t B = 1 + static_cast<std::size_t>(rng.below(4));
    const ArchSpec arch =
        ArchBuilder({side, side, d}).conv(p, {3, 3}, {1, 1}, {1, 1}).flatten().linear(2).build();
    const ParamSet params = reference::random_params(arch, rng);
    const Batch batch = reference::random_batch(arch, B, rng);
    BatchCache cache = forward(arch, params, batch);
    backward(arch, params, cache);
    const LayerCapture& cap = cache.captures[0];

    std::int64_t ghost = 0, inst = 0;
    {
      counters::Scope s;
      const Tensor r = clip::ghost_norm_layer(cap.activations, cap.output_grads);
      ghost = s.peak_transient();
    }
    {
      counters::Scope s;
      const clip::InstantiatedGrads r = clip::instantiate_layer(cap.activations, cap.output_grads);
      inst = s.peak_transient();
    }
    const std::int64_t T = static_cast<std::int64_t>(arch.layers[0].positions());
    const std::int64_t D = static_cast<std::int64_t>(arch.layers[0].patch_size());
    const std::int64_t P = static_cast<std::int64_t>(p);
    const std::int64_t b = static_cast<std::int64_t>(B);
    const std::int64_t want_ghost = b * (2 * T * T + 1);
    const std::int64_t want_inst = b * (P * D + 1);
    slack = std::max({slack, std::abs(ghost - want_ghost), std::abs(inst - want_inst)});
    if (ghost == want_ghost && inst == want_inst) ++st.exact_matches;
    ++st.configs;
    const bool ghost_side = 2 * T * T < P * D;
    if (ghost_side) ++st.crossings_ghost;
    // Near ties: the gap is within the measured bookkeeping slack.
    if (std::abs(2 * T * T - P * D) * b <= slack) {
      ++st.near_ties;
      continue;
    }
    ++considered;
    if ((ghost < inst) == ghost_side) ++st.ordering_matches;
    const bool measured_ghost = ghost < inst;
    const clip::Decision chosen = clip::decide_plan(arch, clip::Priority::Memory).layers[0].decision;
    if ((chosen == clip::Decision::GhostNorm) == measured_ghost) ++st.decision_matches;
  }
  if (stats_out) *stats_out = st;
  const bool straddles = st.crossings_ghost > 0 && st.crossings_ghost < st.configs;
  const bool pass = straddles && considered > 0 && st.ordering_matches == considered &&
                    static_cast<double>(st.decision_matches) >= 0.95 * static_cast<double>(considered);
  std::ostringstream detail;
  detail << st.configs << " single-conv configs (" << st.crossings_ghost << " with 2T^2 < pD), slack " << slack
         << " floats, " << st.near_ties << " near ties excluded; ordering " << st.ordering_matches << "/"
         << considered << ", decision " << st.decision_matches << "/" << considered << ", exact formula "
         << st.exact_matches << "/" << st.configs;
  return {"memory_ordering", pass, detail.str()};
}

CheckResult noise_variance(std::uint64_t seed, std::size_t draws) {
  Rng rng(derive_seed(seed, 107));
  ParamSet zeros;
  zeros.layers.push_back({Tensor({draws, 1}), Tensor()});
  const double sigma = 0.7, R = 1.3;
  const ParamSet noisy = dp::privatize(zeros, sigma, R, rng);
  double mean = 0.0;
  for (double v : noisy.layers[0].weight.values()) mean += v;
  mean /= static_cast<double>(draws);
  double var = 0.0;
  for (double v : noisy.layers[0].weight.values()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(draws - 1);
  const double ratio = var / (sigma * R * sigma * R);

  ParamSet random;
  random.layers.push_back({gaussian(rng, {7, 3}), gaussian(rng, {3})});
  const bool identity = bit_equal(dp::privatize(random, 0.0, R, rng), random);
  const bool pass = ratio >= 0.95 && ratio <= 1.05 && identity;
  return {"noise_variance", pass,
          std::to_string(draws) + " draws, variance/(sigma R)^2 = " + std::to_string(ratio) +
              " (want [0.95, 1.05]); sigma=0 identity " + (identity ? "holds" : "broken")};
}

CheckResult decision_agreement(const ArchSpec& arch) {
  std::size_t rows = 0;
  std::string bad;
  for (clip::Priority pr : {clip::Priority::Memory, clip::Priority::Speed}) {
    const clip::ClipPlan plan = clip::decide_plan(arch, pr);
    const cost::DecisionTable table = cost::decision_table(arch, pr);
    if (plan.layers.size() != table.rows.size()) return {"decision_agreement", false, "layer counts differ"};
    for (std::size_t k = 0; k < plan.layers.size(); ++k, ++rows) {
      if (plan.layers[k].decision != table.rows[k].decision && bad.empty()) {
        bad = table.rows[k].layer + " under " + clip::to_string(pr) + " priority";
      }
    }
  }
  return {"decision_agreement", bad.empty(),
          bad.empty() ? std::to_string(rows) + " layer decisions agree across both priorities" : "disagree at " + bad};
}

CheckResult arch_equivalence(const ArchSpec& arch, std::uint64_t seed, std::size_t batch, double tol) {
  Rng rng(derive_seed(seed, 108));
  const ParamSet params = init_params(arch, rng);
  const Batch b = data::synthetic_blobs(arch.input, arch.classes, batch, derive_seed(seed, 109));
  Compare cmp;
  compare_methods(arch, params, b, "arch", cmp);
  return {"arch_equivalence", cmp.worst <= tol,
          "worst rel diff " + sci(cmp.worst) + " at" + cmp.where.substr(4) + " (tol " + sci(tol) + ")"};
}

CheckResult chunk_invariance(const ArchSpec& arch, std::uint64_t seed, double tol) {
  const Batch data = data::synthetic_blobs(arch.input, arch.classes, 128, derive_seed(seed, 110));
  TrainConfig cfg;
  cfg.method = clip::ClipMethod::Mixed;
  cfg.clip.fn.R = 1.0;
  cfg.sigma = 0.0;
  cfg.lr = 0.05;
  cfg.logical_batch = 64;
  cfg.epochs = 1;
  cfg.seed = seed;
  cfg.physical_batch = 16;
  const ParamSet small = train(arch, data, cfg).params;
  cfg.physical_batch = 64;
  const ParamSet whole = train(arch, data, cfg).params;
  const double diff = relative_difference(small, whole);
  return {"chunk_invariance", diff <= tol,
          "logical 64, physical 16 vs 64, sigma 0: rel diff " + sci(diff) + " (tol " + sci(tol) + ")"};
}

std::vector<CheckResult> run_suite(const SuiteOptions& options) {
  std::vector<CheckResult> out;
  out.push_back(conv_oracle(options.seed));
  out.push_back(ghost_vs_instantiate(options.seed));
  out.push_back(clip_equivalence(options.seed));
  out.push_back(finite_differences(options.seed));
  out.push_back(flop_model(options.seed));
  out.push_back(memory_ordering(options.seed));
  out.push_back(noise_variance(options.seed));
  if (options.arch) {
    out.push_back(decision_agreement(*options.arch));
    out.push_back(arch_equivalence(*options.arch, options.seed));
    out.push_back(chunk_invariance(*options.arch, options.seed));
  }
  return out;
}

}  // namespace dpclip::verify

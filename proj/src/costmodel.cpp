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

#include "dpclip/costmodel.hpp"

#include <algorithm>
#include <string>

#include "dpclip/errors.hpp"

namespace dpclip::cost {

std::string to_string(Count v) {
  if (v == 0) return "0";
  const bool neg = v < 0;
  unsigned __int128 u = neg ? static_cast<unsigned __int128>(-v) : static_cast<unsigned __int128>(v);
  std::string s;
  while (u > 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(u % 10)));
    u /= 10;
  }
  if (neg) s.push_back('-');
  std::reverse(s.begin(), s.end());
  return s;
}

double to_double(Count v) { return static_cast<double>(v); }

std::string format_sig(Count v, int sig) {
  if (sig < 1) throw std::invalid_argument("format_sig: need at least one significant figure");
  if (v < 0) return "-" + format_sig(-v, sig);
  Count limit = 1;
  for (int i = 0; i < sig; ++i) limit *= 10;
  if (v < limit) return to_string(v);
  int exponent = static_cast<int>(to_string(v).size()) - 1;
  Count divisor = 1;
  for (int i = 0; i < exponent - sig + 1; ++i) divisor *= 10;
  Count mantissa = (v + divisor / 2) / divisor;
  if (mantissa >= limit) {
    mantissa /= 10;
    ++exponent;
  }
  const std::string digits = to_string(mantissa);
  std::string out = digits.substr(0, 1);
  if (digits.size() > 1) out += "." + digits.substr(1);
  return out + "e" + std::to_string(exponent);
}

std::vector<LayerDims> layer_dims(const ArchSpec& arch) {
  std::vector<LayerDims> out;
  for (std::size_t idx : arch.trainable_layers()) {
    const LayerSpec& layer = arch.layers[idx];
    out.push_back({layer.name, static_cast<Count>(layer.positions()), static_cast<Count>(layer.patch_size()),
                   static_cast<Count>(layer.outputs())});
  }
  return out;
}

LayerCost layer_costs(const LayerDims& dims, Count B) {
  const Count T = dims.positions;
  const Count D = dims.patch_size;
  const Count p = dims.outputs;
  if (T < 1 || D < 1 || p < 1 || B < 1) throw GeometryError("layer_costs: dimensions must be positive");
  LayerCost c;
  c.forward_time = 2 * B * T * p * D;
  c.backprop_time = 2 * B * T * D * (2 * p + 1);
  c.ghost_norm_time = 2 * B * T * T * (D + p + 1) - B;
  c.instantiate_time = 2 * B * (T + 1) * p * D;
  c.weighted_grad_time = 2 * B * p * D;
  c.backprop_space = B * T * p + 2 * B * T * D + p * D;
  c.ghost_norm_space = B * (2 * T * T + 1);
  c.instantiate_space = B * (p * D + 1);
  c.weighted_grad_space = 0;
  return c;
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::NonDP:
      return "nondp";
    case Algorithm::Opacus:
      return "opacus";
    case Algorithm::FastGradClip:
      return "fastgradclip";
    case Algorithm::Ghost:
      return "ghost";
    case Algorithm::Mixed:
      return "mixed";
  }
  return "?";
}

std::vector<Algorithm> all_algorithms() {
  return {Algorithm::NonDP, Algorithm::Opacus, Algorithm::FastGradClip, Algorithm::Ghost, Algorithm::Mixed};
}

AlgoCost algo_costs(const ArchSpec& arch, Count B, Algorithm algorithm, clip::Priority priority) {
  AlgoCost out;
  out.algorithm = algorithm;
  const clip::ClipPlan plan = clip::decide_plan(arch, priority);
  const auto dims = layer_dims(arch);
  Count transient_max = 0;
  Count transient_sum = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    const LayerDims& d = dims[k];
    const LayerCost c = layer_costs(d, B);
    const Count T = d.positions, D = d.patch_size, p = d.outputs;
    const Count tpd = B * T * p * D;
    const Count ghost_lead = 2 * B * T * T * (p + D);
    const Count act = B * (T * p + 2 * T * D);
    AlgoLayerCost row;
    row.layer = d.name;
    row.decision = plan.layers[k].decision;
    Count transient = 0;
    const Count base_time = c.forward_time + c.backprop_time;
    switch (algorithm) {
      case Algorithm::NonDP:
        row.time = base_time;
        row.space = c.backprop_space;
        row.leading_time = 6 * tpd;
        row.leading_space = p * D + act;
        break;
      case Algorithm::Opacus:
        row.time = base_time + c.instantiate_time + c.weighted_grad_time;
        transient = c.instantiate_space;
        row.leading_time = 8 * tpd;
        row.leading_space = B * p * D + act;
        break;
      case Algorithm::FastGradClip:
        row.time = base_time + c.instantiate_time + c.backprop_time;
        transient = c.instantiate_space;
        row.leading_time = 10 * tpd;
        row.leading_space = B * p * D + act;
        break;
      case Algorithm::Ghost:
        row.time = base_time + c.ghost_norm_time + c.backprop_time;
        transient = c.ghost_norm_space;
        row.leading_time = 10 * tpd + ghost_lead;
        row.leading_space = 2 * B * T * T + act;
        break;
      case Algorithm::Mixed: {
        const bool ghost = row.decision == clip::Decision::GhostNorm;
        row.time = base_time + (ghost ? c.ghost_norm_time : c.instantiate_time) + c.backprop_time;
        transient = ghost ? c.ghost_norm_space : c.instantiate_space;
        row.leading_time = 10 * tpd + (ghost ? ghost_lead : 0);
        row.leading_space = B * (ghost ? 2 * T * T : p * D) + act;
        break;
      }
    }
    if (algorithm != Algorithm::NonDP) row.space = c.backprop_space + transient;
    transient_max = std::max(transient_max, transient);
    transient_sum += transient;
    out.total_time += row.time;
    out.total_leading_time += row.leading_time;
    out.summed_space += row.space;
    out.network_space += c.backprop_space;
    out.layers.push_back(row);
  }
  out.network_space += algorithm == Algorithm::Opacus ? transient_sum : transient_max;
  return out;
}

DecisionTable decision_table(const ArchSpec& arch, clip::Priority priority) {
  DecisionTable table;
  table.priority = priority;
  for (const LayerDims& d : layer_dims(arch)) {
    DecisionRow row;
    row.layer = d.name;
    row.positions = d.positions;
    row.patch_size = d.patch_size;
    row.outputs = d.outputs;
    const Count T = d.positions, D = d.patch_size, p = d.outputs;
    if (priority == clip::Priority::Memory) {
      row.ghost = 2 * T * T;
      row.instantiate = p * D;
    } else {
      row.ghost = 2 * T * T * (D + p + 1);
      row.instantiate = 2 * (T + 1) * p * D;
    }
    row.decision = row.ghost < row.instantiate ? clip::Decision::GhostNorm : clip::Decision::Instantiate;
    table.ghost_total += row.ghost;
    table.instantiate_total += row.instantiate;
    table.mixed_total += std::min(row.ghost, row.instantiate);
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace dpclip::cost

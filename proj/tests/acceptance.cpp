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

// Acceptance suite: one PASS/FAIL line per criterion. Run all with no
// arguments, or one with --criterion N.

#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dpclip/arch_io.hpp"
#include "dpclip/cli.hpp"
#include "dpclip/data.hpp"
#include "dpclip/dp.hpp"
#include "dpclip/train.hpp"
#include "dpclip/verify.hpp"

namespace {

using namespace dpclip;

const std::string kData = DPCLIP_DATA_DIR;

struct Outcome {
  bool pass;
  std::string detail;
};

Outcome from(const verify::CheckResult& r) { return {r.pass, r.detail}; }

Outcome with_budget(Outcome o, double seconds, double limit) {
  if (seconds > limit) {
    o.pass = false;
    o.detail += "; runtime " + std::to_string(seconds) + " s over the " + std::to_string(limit) + " s budget";
  }
  return o;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    if (!cur.empty() && cur.back() == '\r') cur.pop_back();
    out.push_back(cur);
  }
  return out;
}

// Layerwise decision table for VGG-11 at 224×224 as printed: ghost 2T²,
// non-ghost pD, and the selected side.
struct PrintedRow {
  const char* layer;
  const char* ghost;
  const char* inst;
  const char* decision;
};
constexpr PrintedRow kPrinted[] = {
    {"conv1", "5.0e9", "1.7e3", "instantiate"}, {"conv2", "3.0e8", "7.3e4", "instantiate"},
    {"conv3", "2.0e7", "2.9e5", "instantiate"}, {"conv4", "2.0e7", "5.8e5", "instantiate"},
    {"conv5", "1.2e6", "1.1e6", "instantiate"}, {"conv6", "1.2e6", "2.3e6", "ghost"},
    {"conv7", "7.6e4", "2.3e6", "ghost"},       {"conv8", "7.6e4", "2.3e6", "ghost"},
    {"fc9", "2", "1.0e8", "ghost"},             {"fc10", "2", "1.6e7", "ghost"},
    {"fc11", "2", "4.1e6", "ghost"},
};
constexpr const char* kPrintedGhostTotal = "5.34e9";
constexpr const char* kPrintedInstTotal = "1.33e8";
constexpr const char* kPrintedMixedTotal = "3.40e6";

Outcome criterion_1() { return from(verify::clip_equivalence(0, 20, 1e-9)); }

Outcome criterion_2() { return from(verify::ghost_vs_instantiate(0, 300, 1e-9)); }

Outcome criterion_3() {
  std::ostringstream out, err;
  const int code = cli::run({"analyze", "--arch", kData + "/arch/vgg11_224.json", "--table", "decisions"}, out, err);
  if (code != 0) return {false, "analyze failed: " + err.str()};
  const auto lines = split(out.str(), '\n');
  if (lines.size() != 13) return {false, "expected 11 layer rows plus header and totals"};
  std::vector<std::string> mismatches;
  std::size_t cells = 0;
  for (std::size_t k = 0; k < 11; ++k) {
    const auto f = split(lines[k + 1], ',');
    const PrintedRow& want = kPrinted[k];
    const std::pair<std::string, std::string> checks[] = {
        {f[7], want.ghost}, {f[8], want.inst}, {f[6], want.decision}};
    const char* what[] = {"2T^2", "pD", "decision"};
    for (int c = 0; c < 3; ++c, ++cells) {
      if (checks[c].first != checks[c].second) {
        mismatches.push_back(f[0] + " " + what[c] + " " + checks[c].first + " (exact " + (c == 0 ? f[4] : f[5]) +
                             ") vs printed " + checks[c].second);
      }
    }
  }
  // Totals are printed to three significant figures.
  const auto t = split(lines[12], ',');
  auto three_sf = [](const std::string& exact) {
    const double v = std::stod(exact);
    const int e = static_cast<int>(std::floor(std::log10(v)));
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2fe%d", v / std::pow(10.0, e), e);
    return std::string(buf);
  };
  // Mixed total Σ min(2T², pD), recomputed from the rows.
  double mixed = 0;
  for (std::size_t k = 0; k < 11; ++k) {
    const auto f = split(lines[k + 1], ',');
    mixed += std::min(std::stod(f[4]), std::stod(f[5]));
  }
  const std::pair<std::string, std::string> totals[] = {{three_sf(t[4]), kPrintedGhostTotal},
                                                        {three_sf(t[5]), kPrintedInstTotal},
                                                        {three_sf(std::to_string(static_cast<long long>(mixed))),
                                                         kPrintedMixedTotal}};
  const char* total_names[] = {"ghost total", "non-ghost total", "mixed total"};
  for (int c = 0; c < 3; ++c, ++cells) {
    if (totals[c].first != totals[c].second) {
      mismatches.push_back(std::string(total_names[c]) + " " + totals[c].first + " vs printed " + totals[c].second);
    }
  }
  std::string detail = std::to_string(cells - mismatches.size()) + "/" + std::to_string(cells) +
                       " cells match the printed table (all 11 decisions checked)";
  if (!mismatches.empty()) {
    detail += "; mismatches:";
    for (const auto& m : mismatches) detail += " [" + m + "]";
  }
  return {mismatches.empty(), detail};
}

Outcome criterion_4() { return from(verify::flop_model(0, 50)); }

Outcome criterion_5() { return from(verify::memory_ordering(0, 200)); }

Outcome criterion_6() { return from(verify::finite_differences(0, 1e-5, 1e-5)); }

TrainConfig desk_config(clip::ClipMethod method) {
  TrainConfig cfg;
  cfg.method = method;
  cfg.clip.fn.kind = clip::ClipKind::Abadi;
  cfg.clip.fn.R = 0.1;
  cfg.sigma = 0.5;
  cfg.lr = 0.2;
  cfg.logical_batch = 64;
  cfg.physical_batch = 32;
  cfg.epochs = 5;
  cfg.seed = 0;
  return cfg;
}

Outcome criterion_7() {
  const ArchSpec arch = load_arch(kData + "/arch/smallcnn_32.json");
  const verify::CheckResult noise = verify::noise_variance(0, 10000);
  const verify::CheckResult chunks = verify::chunk_invariance(arch, 0, 1e-9);

  const Batch data = data::synthetic_blobs(arch.input, arch.classes, 600, derive_seed(0, 5));
  const TrainConfig cfg = desk_config(clip::ClipMethod::Mixed);
  const TrainResult a = train(arch, data, cfg);
  const TrainResult b = train(arch, data, cfg);
  bool same = bit_equal(a.params, b.params) && a.epochs.size() == b.epochs.size();
  for (std::size_t e = 0; same && e < a.epochs.size(); ++e) {
    same = a.epochs[e].train_loss == b.epochs[e].train_loss && a.epochs[e].eval_loss == b.epochs[e].eval_loss;
  }
  return {noise.pass && chunks.pass && same, noise.detail + "; " + chunks.detail +
                                                 "; 5-epoch same-seed rerun " +
                                                 (same ? "bit-identical" : "DIFFERS")};
}

Outcome criterion_8() {
  const ArchSpec arch = load_arch(kData + "/arch/smallcnn_32.json");
  const Batch data = data::synthetic_blobs(arch.input, arch.classes, 600, derive_seed(0, 5));
  const TrainResult mixed = train(arch, data, desk_config(clip::ClipMethod::Mixed));
  const TrainResult naive = train(arch, data, desk_config(clip::ClipMethod::Naive));
  bool acc_equal = mixed.epochs.size() == naive.epochs.size();
  double worst_loss = 0;
  for (std::size_t e = 0; acc_equal && e < mixed.epochs.size(); ++e) {
    acc_equal = mixed.epochs[e].accuracy == naive.epochs[e].accuracy;
    const double a = mixed.epochs[e].train_loss, b = naive.epochs[e].train_loss;
    worst_loss = std::max(worst_loss, std::abs(a - b) / std::max(std::abs(a), std::abs(b)));
  }
  const double final_acc = mixed.epochs.back().accuracy;
  const double param_diff = relative_difference(mixed.params, naive.params);
  std::ostringstream d;
  d << "final accuracy mixed " << final_acc << ", naive " << naive.epochs.back().accuracy
    << (acc_equal ? " (equal every epoch)" : " (DIFFER)") << "; loss trajectory max rel diff " << worst_loss
    << ", final params rel diff " << param_diff << "; threshold 0.8";
  return {acc_equal && final_acc > 0.8 && worst_loss <= 1e-9 && param_diff <= 1e-9, d.str()};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "method equivalence", 60, criterion_1},   {2, "ghost-norm correctness", 60, criterion_2},
      {3, "layerwise decision table", 5, criterion_3}, {4, "FLOP-model exactness", 60, criterion_4},
      {5, "memory-model ordering", 60, criterion_5}, {6, "gradient correctness", 60, criterion_6},
      {7, "DP mechanics", 120, criterion_7},         {8, "desk-scale training", 300, criterion_8},
  };
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
  }
  int failed = 0;
  for (const Criterion& c : all) {
    if (only != 0 && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o = with_budget(o, secs, c.budget_seconds);
    std::printf("criterion %d %s: %s (%.2f s) %s\n", c.id, o.pass ? "PASS" : "FAIL", c.name, secs,
                o.detail.c_str());
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}

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

#include "dpclip/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <sstream>

#include "dpclip/arch_io.hpp"
#include "dpclip/bench.hpp"
#include "dpclip/conv.hpp"
#include "dpclip/costmodel.hpp"
#include "dpclip/data.hpp"
#include "dpclip/errors.hpp"
#include "dpclip/report.hpp"
#include "dpclip/train.hpp"
#include "dpclip/verify.hpp"

#ifndef DPCLIP_DATA_DIR
#define DPCLIP_DATA_DIR "data"
#endif

namespace dpclip::cli {
namespace {

using report::Format;
using report::Table;

std::string str(cost::Count v) { return cost::to_string(v); }
std::string sig(cost::Count v) { return cost::format_sig(v, 2); }

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

const char* leading_form(cost::Algorithm a, clip::Decision d) {
  switch (a) {
    case cost::Algorithm::NonDP:
      return "6BTpD";
    case cost::Algorithm::Opacus:
      return "8BTpD";
    case cost::Algorithm::FastGradClip:
      return "10BTpD";
    case cost::Algorithm::Ghost:
      return "10BTpD+2BT^2(p+D)";
    case cost::Algorithm::Mixed:
      return d == clip::Decision::GhostNorm ? "10BTpD+2BT^2(p+D)" : "10BTpD";
  }
  return "";
}

// Table sections of one report are separated by a blank line.
void section(std::ostream& out, const Table& t, Format f, const std::string& title, bool& first) {
  if (!first) out << (f == Format::Csv ? "\r\n" : "\n");
  first = false;
  if (f == Format::Text) out << title << '\n';
  t.write(out, f);
}

struct ClipFlags {
  std::string fn = "abadi";
  double R = 1.0;
  double gamma = 0.01;
  std::string priority = "memory";
  bool no_bias_norm = false;

  void add(CLI::App* app) {
    app->add_option("--clip-fn", fn, "abadi | automatic | global")->capture_default_str();
    app->add_option("--R", R, "clipping norm")->capture_default_str();
    app->add_option("--gamma", gamma, "automatic clipping stabilizer")->capture_default_str();
    app->add_option("--priority", priority, "mixed decision rule: memory | speed")->capture_default_str();
    app->add_flag("--no-bias-norm", no_bias_norm, "leave bias gradients out of the per-sample norm");
  }
  clip::ClipOptions options() const {
    clip::ClipOptions o;
    o.fn.kind = clip::parse_clip_kind(fn);
    o.fn.R = R;
    o.fn.gamma = gamma;
    if (!(R > 0.0)) throw ParseError("--R must be positive");
    o.priority = clip::parse_priority(priority);
    o.include_bias = !no_bias_norm;
    return o;
  }
};

int cmd_analyze(const std::string& arch_path, const std::string& priority_name, std::size_t batch,
                const std::string& format_name, const std::string& which, std::ostream& out) {
  const ArchSpec arch = load_arch(arch_path);
  const clip::Priority priority = clip::parse_priority(priority_name);
  const Format format = report::parse_format(format_name);
  bool first = true;

  if (which == "all" || which == "decisions") {
    const cost::DecisionTable dt = cost::decision_table(arch, priority);
    const bool mem = priority == clip::Priority::Memory;
    const std::string g = mem ? "ghost_space" : "ghost_time";
    const std::string i = mem ? "inst_space" : "inst_time";
    Table t({"layer", "T", "D", "p", g, i, "decision", g + "_2sf", i + "_2sf", "chosen_2sf"});
    for (const cost::DecisionRow& r : dt.rows) {
      const cost::Count chosen = r.decision == clip::Decision::GhostNorm ? r.ghost : r.instantiate;
      t.add_row({r.layer, str(r.positions), str(r.patch_size), str(r.outputs), str(r.ghost), str(r.instantiate),
                 clip::to_string(r.decision), sig(r.ghost), sig(r.instantiate), sig(chosen)});
    }
    t.add_row({"total", "", "", "", str(dt.ghost_total), str(dt.instantiate_total), "mixed", sig(dt.ghost_total),
               sig(dt.instantiate_total), sig(dt.mixed_total)});
    section(out, t, format,
            "Layerwise decision (" + clip::to_string(priority) + " priority, mixed total " + str(dt.mixed_total) + ")",
            first);
  }

  if (which == "all" || which == "costs") {
    Table per_layer({"algorithm", "layer", "decision", "time", "space", "leading_form", "leading_time",
                     "leading_space"});
    Table totals({"algorithm", "total_time", "total_leading_time", "summed_space", "network_space"});
    for (cost::Algorithm a : cost::all_algorithms()) {
      const cost::AlgoCost c = cost::algo_costs(arch, static_cast<cost::Count>(batch), a, priority);
      for (const cost::AlgoLayerCost& l : c.layers) {
        const std::string dec = a == cost::Algorithm::Mixed ? clip::to_string(l.decision) : "";
        per_layer.add_row({cost::to_string(a), l.layer, dec, str(l.time), str(l.space), leading_form(a, l.decision),
                           str(l.leading_time), str(l.leading_space)});
      }
      totals.add_row({cost::to_string(a), str(c.total_time), str(c.total_leading_time), str(c.summed_space),
                      str(c.network_space)});
    }
    section(out, per_layer, format,
            "Per-layer cost at B=" + std::to_string(batch) + " (time and space composed exactly; leading_* are the "
            "highest-order terms)", first);
    section(out, totals, format,
            "Totals (network_space: stored activations plus the norm transient; opacus holds all layers' per-sample "
            "gradients at once)", first);
  }
  return 0;
}

int cmd_verify(std::uint64_t seed, const std::string& arch_path, bool corrupt, std::ostream& out) {
  verify::SuiteOptions opts;
  opts.seed = seed;
  opts.arch = load_arch(arch_path);
  conv::testing::set_corrupt_unfold(corrupt);
  const auto results = verify::run_suite(opts);
  conv::testing::set_corrupt_unfold(false);
  std::size_t failed = 0;
  for (const verify::CheckResult& r : results) {
    out << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    if (!r.pass) ++failed;
  }
  out << (failed == 0 ? "all " + std::to_string(results.size()) + " checks passed"
                      : std::to_string(failed) + " of " + std::to_string(results.size()) + " checks failed")
      << '\n';
  return failed == 0 ? 0 : 1;
}

Batch load_data(const std::string& spec, const ArchSpec& arch, std::size_t samples, double noise,
                std::uint64_t seed) {
  if (spec == "synthetic") return data::synthetic_blobs(arch.input, arch.classes, samples, derive_seed(seed, 5), noise);
  if (spec.rfind("idx:", 0) == 0) {
    Batch b = data::load_idx_spec(spec);
    Shape want{b.size()};
    want.insert(want.end(), arch.input.begin(), arch.input.end());
    if (b.inputs.size() == numel(want)) b.inputs.reshape(want);
    if (b.inputs.shape() != want) {
      throw ShapeError("dataset samples " + to_string(b.inputs.shape()) + " do not fit the arch input " +
                       to_string(arch.input));
    }
    for (std::size_t l : b.labels) {
      if (l >= arch.classes) throw ShapeError("dataset has more classes than the arch outputs");
    }
    return b;
  }
  throw ParseError("--data must be 'synthetic' or 'idx:PATH'");
}

}  // namespace

std::string data_dir() { return DPCLIP_DATA_DIR; }

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Differentially private training with per-sample gradient clipping", "dpclip"};
  app.require_subcommand(1);
  const std::string default_arch = data_dir() + "/arch/smallcnn_32.json";

  // analyze
  std::string a_arch, a_priority = "memory", a_format = "csv", a_table = "all";
  std::size_t a_batch = 1;
  auto* analyze = app.add_subcommand("analyze", "cost model and layerwise decisions, no training");
  analyze->add_option("--arch", a_arch, "architecture JSON")->required();
  analyze->add_option("--priority", a_priority, "memory | speed")->capture_default_str();
  analyze->add_option("--batch", a_batch, "batch size for the cost table")->capture_default_str()
      ->check(CLI::PositiveNumber);
  analyze->add_option("--format", a_format, "csv | text")->capture_default_str();
  analyze->add_option("--table", a_table, "all | decisions | costs")->capture_default_str();

  // verify
  std::uint64_t v_seed = 0;
  std::string v_arch = default_arch;
  bool v_corrupt = false;
  auto* verify_cmd = app.add_subcommand("verify", "run the oracle and invariant suite");
  verify_cmd->add_option("--seed", v_seed)->capture_default_str();
  verify_cmd->add_option("--arch", v_arch, "arch for the arch-level checks")->capture_default_str();
  verify_cmd->add_flag("--corrupt-unfold", v_corrupt, "test hook: reverse unfold row order");

  // train
  std::string t_arch, t_method = "mixed", t_data = "synthetic", t_out, t_format = "text", t_opt = "sgd",
                      t_reduction = "sum";
  ClipFlags t_clip;
  double t_sigma = 0.0, t_lr = 0.1, t_noise = 1.0;
  std::size_t t_batch = 64, t_physical = 0, t_epochs = 1, t_samples = 300;
  std::uint64_t t_seed = 0;
  bool t_no_timing = false;
  auto* train_cmd = app.add_subcommand("train", "DP-SGD training with gradient accumulation");
  train_cmd->add_option("--arch", t_arch, "architecture JSON")->required();
  train_cmd->add_option("--method", t_method, "naive | instantiate | secondpass | ghost | mixed")
      ->capture_default_str();
  t_clip.add(train_cmd);
  train_cmd->add_option("--sigma", t_sigma, "noise multiplier")->capture_default_str();
  train_cmd->add_option("--lr", t_lr, "learning rate")->capture_default_str();
  train_cmd->add_option("--batch", t_batch, "logical batch size")->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--physical-batch", t_physical, "physical batch size (default: logical)");
  train_cmd->add_option("--epochs", t_epochs)->capture_default_str();
  train_cmd->add_option("--seed", t_seed)->capture_default_str();
  train_cmd->add_option("--data", t_data, "synthetic | idx:IMAGES,LABELS | idx:DIR")->capture_default_str();
  train_cmd->add_option("--samples", t_samples, "synthetic set size")->capture_default_str();
  train_cmd->add_option("--noise", t_noise, "synthetic blob spread")->capture_default_str();
  train_cmd->add_option("--optimizer", t_opt, "sgd | adam")->capture_default_str();
  train_cmd->add_option("--reduction", t_reduction, "sum | mean")->capture_default_str();
  train_cmd->add_option("--out", t_out, "write the final parameters as a flat dump");
  train_cmd->add_option("--format", t_format, "csv | text")->capture_default_str();
  train_cmd->add_flag("--no-timing", t_no_timing, "omit the wall-clock column");

  // bench
  std::string b_arch, b_methods = "instantiate,secondpass,ghost,mixed", b_format = "csv";
  ClipFlags b_clip;
  std::int64_t b_budget = 0;
  std::size_t b_batch = 16, b_samples = 256, b_limit = 4096;
  std::uint64_t b_seed = 0;
  bool b_no_timing = false;
  auto* bench_cmd = app.add_subcommand("bench", "peak floats, timing and max batch under a float budget");
  bench_cmd->add_option("--arch", b_arch, "architecture JSON")->required();
  bench_cmd->add_option("--budget", b_budget, "float budget for the max-batch search (0 skips it)")
      ->capture_default_str();
  bench_cmd->add_option("--methods", b_methods, "comma-separated methods")->capture_default_str();
  b_clip.add(bench_cmd);
  bench_cmd->add_option("--batch", b_batch, "physical batch for timing and peak floats")->capture_default_str()
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--samples", b_samples, "samples per timed epoch")->capture_default_str();
  bench_cmd->add_option("--limit", b_limit, "largest batch the search tries")->capture_default_str();
  bench_cmd->add_option("--seed", b_seed)->capture_default_str();
  bench_cmd->add_option("--format", b_format, "csv | text")->capture_default_str();
  bench_cmd->add_flag("--no-timing", b_no_timing, "omit wall-clock columns");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (analyze->parsed()) {
      return cmd_analyze(a_arch, a_priority, a_batch, a_format, a_table, out);
    }
    if (verify_cmd->parsed()) return cmd_verify(v_seed, v_arch, v_corrupt, out);
    if (train_cmd->parsed()) {
      const ArchSpec arch = load_arch(t_arch);
      TrainConfig cfg;
      cfg.method = clip::parse_method(t_method);
      cfg.clip = t_clip.options();
      cfg.sigma = t_sigma;
      cfg.lr = t_lr;
      cfg.logical_batch = t_batch;
      cfg.physical_batch = t_physical == 0 ? t_batch : t_physical;
      cfg.epochs = t_epochs;
      cfg.seed = t_seed;
      if (t_opt == "adam") {
        cfg.optimizer = OptimizerKind::Adam;
      } else if (t_opt != "sgd") {
        throw ParseError("unknown optimizer '" + t_opt + "'");
      }
      if (t_reduction == "mean") {
        cfg.reduction = dp::Reduction::Mean;
      } else if (t_reduction != "sum") {
        throw ParseError("unknown reduction '" + t_reduction + "'");
      }
      const Format format = report::parse_format(t_format);
      const Batch data = load_data(t_data, arch, t_samples, t_noise, t_seed);
      std::vector<std::string> header{"epoch", "train_loss", "eval_loss", "accuracy", "steps"};
      if (!t_no_timing) header.push_back("seconds");
      Table table(header);
      const TrainResult result = train(arch, data, cfg, [&](const EpochMetrics& m) {
        std::vector<std::string> row{std::to_string(m.epoch), report::format_double(m.train_loss),
                                     report::format_double(m.eval_loss), report::format_double(m.accuracy),
                                     std::to_string(m.steps)};
        if (!t_no_timing) row.push_back(fixed(m.seconds, 3));
        table.add_row(row);
        if (format == Format::Text) {
          err << "epoch " << m.epoch << "  loss " << fixed(m.eval_loss, 4) << "  acc " << fixed(m.accuracy, 4)
              << '\n';
        }
      });
      table.write(out, format);
      if (!t_out.empty()) save_params(t_out, result.params);
      return 0;
    }
    if (bench_cmd->parsed()) {
      const ArchSpec arch = load_arch(b_arch);
      bench::BenchConfig cfg;
      cfg.methods.clear();
      std::stringstream list(b_methods);
      for (std::string m; std::getline(list, m, ',');) {
        if (!m.empty()) cfg.methods.push_back(clip::parse_method(m));
      }
      cfg.clip = b_clip.options();
      cfg.physical_batch = b_batch;
      cfg.epoch_samples = b_samples;
      cfg.budget = b_budget;
      cfg.batch_limit = b_limit;
      cfg.seed = b_seed;
      cfg.timing = !b_no_timing;
      const Format format = report::parse_format(b_format);
      const auto rows = bench::run(arch, cfg);
      std::vector<std::string> header{"method"};
      if (cfg.timing) header.push_back("seconds_per_epoch");
      header.insert(header.end(), {"peak_floats", "max_batch", "floats_at_max", "floats_above_max"});
      if (cfg.timing) header.push_back("seconds_per_epoch_at_max");
      Table t(header);
      for (const bench::BenchRow& r : rows) {
        std::vector<std::string> row{clip::to_string(r.method)};
        if (cfg.timing) row.push_back(fixed(r.seconds_per_epoch, 4));
        const bool searched = cfg.budget > 0;
        row.push_back(std::to_string(r.peak_floats));
        row.push_back(!searched ? "" : r.search.hit_limit ? ">=" + std::to_string(r.search.max_batch)
                                                          : std::to_string(r.search.max_batch));
        row.push_back(searched && r.search.max_batch > 0 ? std::to_string(r.search.floats_at_max) : "");
        row.push_back(searched && r.search.floats_above ? std::to_string(*r.search.floats_above) : "");
        if (cfg.timing) row.push_back(searched && r.search.max_batch > 0 ? fixed(r.seconds_at_max, 4) : "");
        t.add_row(row);
      }
      t.write(out, format);
      if (format == Format::Text) {
        out << "\npeak_floats: parameters + input batch + peak transient of one clipped-gradient call at batch "
            << cfg.physical_batch << ".\nThis is the analogue of allocator active memory, not reserved memory.\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace dpclip::cli

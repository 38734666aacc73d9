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

#include "dpclip/train.hpp"

#include <bit>
#include <chrono>
#include <fstream>
#include <memory>
#include <numeric>

#include "dpclip/errors.hpp"

namespace dpclip {
namespace {

std::unique_ptr<dp::Optimizer> make_optimizer(const TrainConfig& config) {
  if (config.optimizer == OptimizerKind::Adam) return std::make_unique<dp::Adam>(config.lr);
  return std::make_unique<dp::Sgd>(config.lr);
}

template <typename T>
void put_le(std::ofstream& out, T v) {
  static_assert(std::endian::native == std::endian::little, "parameter dumps assume a little-endian host");
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T get_le(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw ParseError("parameter dump is truncated");
  return v;
}

}  // namespace

EpochMetrics evaluate_dataset(const ArchSpec& arch, const ParamSet& params, const Batch& data,
                              std::size_t chunk) {
  EpochMetrics m;
  double loss = 0.0;
  std::size_t hits = 0;
  for (std::size_t begin = 0; begin < data.size(); begin += chunk) {
    const std::size_t end = std::min(begin + chunk, data.size());
    const Batch part = data.slice(begin, end);
    const ForwardResult r = evaluate(arch, params, part);
    for (double l : r.losses) loss += l;
    hits += static_cast<std::size_t>(accuracy(r.logits, part.labels) * static_cast<double>(part.size()) + 0.5);
  }
  m.eval_loss = loss / static_cast<double>(data.size());
  m.accuracy = static_cast<double>(hits) / static_cast<double>(data.size());
  return m;
}

TrainResult train(const ArchSpec& arch, const Batch& data, const TrainConfig& config,
                  const std::function<void(const EpochMetrics&)>& on_epoch) {
  if (config.physical_batch == 0 || config.logical_batch == 0) throw ParseError("batch sizes must be positive");
  if (config.physical_batch > config.logical_batch) {
    throw ParseError("physical batch size must not exceed the logical batch size");
  }
  if (data.size() == 0) throw ParseError("training set is empty");

  Rng init_rng(derive_seed(config.seed, seed_stream::kInit));
  Rng shuffle_rng(derive_seed(config.seed, seed_stream::kShuffle));
  Rng noise_rng(derive_seed(config.seed, seed_stream::kNoise));

  TrainResult result;
  result.params = init_params(arch, init_rng);
  auto optimizer = make_optimizer(config);
  const dp::PrivacyParams privacy{config.clip.fn, config.sigma, config.seed};
  dp::GradientAccumulator acc;

  std::vector<std::size_t> order(data.size());
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    EpochMetrics m;
    m.epoch = epoch;
    double loss_sum = 0.0;
    for (std::size_t lb = 0; lb < order.size(); lb += config.logical_batch) {
      const std::size_t lb_end = std::min(lb + config.logical_batch, order.size());
      for (std::size_t pb = lb; pb < lb_end; pb += config.physical_batch) {
        const std::size_t pb_end = std::min(pb + config.physical_batch, lb_end);
        const Batch chunk = data.gather(std::span<const std::size_t>(order.data() + pb, pb_end - pb));
        const clip::ClipResult r = clip::clipped_gradient(arch, result.params, chunk, config.method, config.clip);
        for (double l : r.losses) loss_sum += l;
        if (pb_end < lb_end) {
          acc.virtual_step(r.clipped_sum, chunk.size());
        } else {
          acc.real_step(&r.clipped_sum, chunk.size(), result.params, privacy, noise_rng, *optimizer,
                        config.reduction);
          ++m.steps;
        }
      }
    }
    m.train_loss = loss_sum / static_cast<double>(data.size());
    const EpochMetrics eval = evaluate_dataset(arch, result.params, data, config.physical_batch);
    m.eval_loss = eval.eval_loss;
    m.accuracy = eval.accuracy;
    m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.epochs.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  return result;
}

void save_params(const std::string& path, const ParamSet& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write parameter dump '" + path + "'");
  for (const Tensor* t : params.tensors()) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t->rank()));
    for (std::size_t d : t->shape()) put_le<std::uint64_t>(out, d);
    for (double v : t->values()) put_le<double>(out, v);
  }
}

ParamSet load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open parameter dump '" + path + "'");
  std::vector<Tensor> tensors;
  while (in.peek() != std::char_traits<char>::eof()) {
    const auto rank = get_le<std::uint32_t>(in);
    Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(get_le<std::uint64_t>(in));
    Tensor t(shape);
    for (double& v : t.values()) v = get_le<double>(in);
    tensors.push_back(std::move(t));
  }
  // Weights are rank 2, biases rank 1: a rank-1 tensor attaches to the
  // preceding weight.
  ParamSet out;
  for (Tensor& t : tensors) {
    if (t.rank() == 2) {
      out.layers.push_back({std::move(t), Tensor()});
    } else if (t.rank() == 1 && !out.layers.empty() && out.layers.back().bias.empty()) {
      out.layers.back().bias = std::move(t);
    } else {
      throw ParseError("parameter dump has an unexpected tensor layout");
    }
  }
  return out;
}

}  // namespace dpclip

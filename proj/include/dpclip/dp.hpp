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

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>

#include "dpclip/clip.hpp"
#include "dpclip/net.hpp"
#include "dpclip/rng.hpp"

namespace dpclip::dp {

struct PrivacyParams {
  clip::ClipFn clip;
  double sigma = 0.0;  // noise multiplier
  std::uint64_t seed = 0;
};

/// clipped_sum + σ·R·𝒩(0, I), one draw per coordinate in parameter order
/// (weight₁, bias₁, weight₂, ...). σ = 0 returns the input unchanged.
ParamSet privatize(const ParamSet& clipped_sum, double sigma, double R, Rng& noise);

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(ParamSet& params, const ParamSet& grad) = 0;
};

class Sgd final : public Optimizer {
 public:
  explicit Sgd(double lr) : lr_(lr) {}
  void step(ParamSet& params, const ParamSet& grad) override;

 private:
  double lr_;
};

class Adam final : public Optimizer {
 public:
  Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(ParamSet& params, const ParamSet& grad) override;
  std::size_t steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::optional<ParamSet> m_;
  std::optional<ParamSet> v_;
};

/// What the optimizer consumes: the privatized sum, or the sum divided by the
/// number of samples in the logical batch (signal and noise alike).
enum class Reduction { Sum, Mean };

/// Running Σᵢ Cᵢ·gᵢ across the physical batches of one logical batch.
class GradientAccumulator {
 public:
  void virtual_step(const ParamSet& clipped_sum, std::size_t samples);
  bool empty() const { return !sum_.has_value(); }
  std::size_t virtual_steps() const { return steps_; }
  std::size_t samples() const { return samples_; }
  const std::optional<ParamSet>& sum() const { return sum_; }

  /// Adds the final chunk (if any), privatizes the total once, applies one
  /// optimizer update and clears the accumulator. Throws StateError when
  /// there is nothing to apply.
  void real_step(const ParamSet* final_sum, std::size_t final_samples, ParamSet& params,
                 const PrivacyParams& privacy, Rng& noise, Optimizer& optimizer,
                 Reduction reduction = Reduction::Sum);

 private:
  std::optional<ParamSet> sum_;
  std::size_t steps_ = 0;
  std::size_t samples_ = 0;
};

}  // namespace dpclip::dp

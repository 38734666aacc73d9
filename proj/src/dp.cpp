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

#include "dpclip/dp.hpp"

#include <cmath>

#include "dpclip/errors.hpp"

namespace dpclip::dp {

ParamSet privatize(const ParamSet& clipped_sum, double sigma, double R, Rng& noise) {
  if (sigma < 0.0 || !std::isfinite(sigma)) throw NumericError("privatize: sigma must be finite and >= 0");
  for (const Tensor* t : clipped_sum.tensors())
    for (double v : t->values())
      if (!std::isfinite(v)) throw NumericError("privatize: non-finite clipped gradient");
  ParamSet out = clipped_sum;
  if (sigma == 0.0) return out;
  const double scale = sigma * R;
  for (Tensor* t : out.tensors())
    for (double& v : t->values()) v += scale * noise.gaussian();
  return out;
}

void Sgd::step(ParamSet& params, const ParamSet& grad) { add_scaled(params, -lr_, grad); }

void Adam::step(ParamSet& params, const ParamSet& grad) {
  if (!m_) {
    m_ = ParamSet(grad);
    v_ = ParamSet(grad);
    for (Tensor* t : m_->tensors()) t->fill(0.0);
    for (Tensor* t : v_->tensors()) t->fill(0.0);
  }
  ++t_;
  auto ps = params.tensors();
  auto gs = grad.tensors();
  auto ms = m_->tensors();
  auto vs = v_->tensors();
  if (ps.size() != gs.size() || ms.size() != gs.size()) throw ShapeError("Adam: parameter layout changed");
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t j = 0; j < ps.size(); ++j) {
    if (ps[j]->shape() != gs[j]->shape()) throw ShapeError("Adam: gradient shape mismatch");
    for (std::size_t i = 0; i < ps[j]->size(); ++i) {
      const double g = (*gs[j])[i];
      double& m = (*ms[j])[i];
      double& v = (*vs[j])[i];
      m = beta1_ * m + (1.0 - beta1_) * g;
      v = beta2_ * v + (1.0 - beta2_) * g * g;
      (*ps[j])[i] -= lr_ * (m / c1) / (std::sqrt(v / c2) + eps_);
    }
  }
}

void GradientAccumulator::virtual_step(const ParamSet& clipped_sum, std::size_t samples) {
  if (!sum_) {
    sum_ = clipped_sum;
  } else {
    add_scaled(*sum_, 1.0, clipped_sum);
  }
  ++steps_;
  samples_ += samples;
}

void GradientAccumulator::real_step(const ParamSet* final_sum, std::size_t final_samples,
                                    ParamSet& params, const PrivacyParams& privacy, Rng& noise,
                                    Optimizer& optimizer, Reduction reduction) {
  if (final_sum != nullptr) {
    virtual_step(*final_sum, final_samples);
    --steps_;  // the final chunk is part of the real step
  }
  if (!sum_) throw StateError("real_step with an empty accumulator and no incoming gradient");
  ParamSet grad = privatize(*sum_, privacy.sigma, privacy.clip.R, noise);
  if (reduction == Reduction::Mean) {
    if (samples_ == 0) throw StateError("mean reduction over zero samples");
    for (Tensor* t : grad.tensors()) scale_inplace(*t, 1.0 / static_cast<double>(samples_));
  }
  optimizer.step(params, grad);
  sum_.reset();
  steps_ = 0;
  samples_ = 0;
}

}  // namespace dpclip::dp

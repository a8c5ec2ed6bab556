// Copyright 2026 The REDP Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef REDP_AD_OPTIM_HPP_
#define REDP_AD_OPTIM_HPP_

#include <cstdint>
#include <functional>
#include <vector>

#include "redp/ad/tape.hpp"
#include "redp/ad/tensor.hpp"

namespace redp::ad {

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first;
  std::vector<std::vector<double>> second;
};

AdamState make_adam(const ParameterStore& params, double lr);

// One bias-corrected Adam update from the gradients held in `params`.
// Non-trainable parameters are skipped. Throws ShapeMismatch when the state
// does not match the store.
void adam_step(ParameterStore& params, AdamState& state);

// Builds the loss graph for the current parameter values.
using LossBuilder = std::function<Var(Tape&, ParameterStore&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
  // Coordinates whose stencil crossed a kink (branch signature changed);
  // the finite difference is not a derivative estimate there.
  std::size_t coords_skipped = 0;
  std::string worst_param;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Central-difference stencils: 2-point (f(x+h) - f(x-h)) / 2h, or the
// 4-point (-f(x+2h) + 8f(x+h) - 8f(x-h) + f(x-2h)) / 12h, whose O(h^4)
// truncation error allows a larger h and so less roundoff.
enum class Stencil { kTwoPoint, kFourPoint };

// Compares backward() against central differences on up to
// `coords_per_param` coordinates per trainable parameter (all when 0).
// Relative error is |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
GradCheckResult grad_check(ParameterStore& params, const LossBuilder& build, double eps,
                           std::size_t coords_per_param = 0, std::uint64_t seed = 0,
                           Stencil stencil = Stencil::kTwoPoint);

}  // namespace redp::ad

#endif  // REDP_AD_OPTIM_HPP_

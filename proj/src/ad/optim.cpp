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

#include "redp/ad/optim.hpp"

#include <cmath>
#include <numeric>

#include "redp/error.hpp"
#include "redp/rng.hpp"

namespace redp::ad {

AdamState make_adam(const ParameterStore& params, double lr) {
  AdamState state;
  state.lr = lr;
  for (const auto& p : params) {
    state.first.emplace_back(p.value.size(), 0.0);
    state.second.emplace_back(p.value.size(), 0.0);
  }
  return state;
}

void adam_step(ParameterStore& params, AdamState& state) {
  if (state.first.size() != params.size() || state.second.size() != params.size()) {
    throw Error(ErrorKind::kShapeMismatch, "optimizer state does not match parameters");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params.at(i);
    auto& m = state.first[i];
    auto& v = state.second[i];
    if (m.size() != p.value.size() || v.size() != p.value.size() ||
        p.grad.size() != p.value.size()) {
      throw Error(ErrorKind::kShapeMismatch, "optimizer state shape differs for " + p.name);
    }
    if (!p.trainable) continue;
    for (std::size_t j = 0; j < m.size(); ++j) {
      const double g = p.grad[j];
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      p.value.data[j] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

GradCheckResult grad_check(ParameterStore& params, const LossBuilder& build, double eps,
                           std::size_t coords_per_param, std::uint64_t seed,
                           Stencil stencil) {
  params.zero_grad();
  std::uint64_t base_signature = 0;
  {
    Tape tape;
    Var loss = build(tape, params);
    tape.backward(loss);
    base_signature = tape.branch_signature();
  }
  bool crossed = false;
  auto evaluate = [&]() {
    Tape tape;
    Var loss = build(tape, params);
    crossed = crossed || tape.branch_signature() != base_signature;
    return tape.item(loss);
  };

  Rng rng(seed);
  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = params.at(pi);
    if (!p.trainable) continue;
    std::vector<std::size_t> coords(p.value.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (coords_per_param > 0 && coords.size() > coords_per_param) {
      rng.shuffle(std::span<std::size_t>(coords));
      coords.resize(coords_per_param);
    }
    for (std::size_t j : coords) {
      const double saved = p.value.data[j];
      crossed = false;
      auto at = [&](double offset) {
        p.value.data[j] = saved + offset;
        return evaluate();
      };
      double numeric = 0.0;
      if (stencil == Stencil::kTwoPoint) {
        numeric = (at(eps) - at(-eps)) / (2.0 * eps);
      } else {
        numeric = (-at(2 * eps) + 8.0 * at(eps) - 8.0 * at(-eps) + at(-2 * eps)) / (12.0 * eps);
      }
      p.value.data[j] = saved;
      if (crossed) {
        ++result.coords_skipped;
        continue;
      }
      const double analytic = p.grad[j];
      const double err =
          std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      ++result.coords_checked;
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_param = p.name + "[" + std::to_string(j) + "]";
        result.worst_analytic = analytic;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace redp::ad

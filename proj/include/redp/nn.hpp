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

#ifndef REDP_NN_HPP_
#define REDP_NN_HPP_

#include <string>
#include <utility>
#include <vector>

#include "redp/ad/tape.hpp"
#include "redp/ad/tensor.hpp"
#include "redp/rng.hpp"

namespace redp::nn {

// Weight stored as (in, out) so a feature row multiplies from the left.
struct Dense {
  std::size_t weight = 0;
  std::size_t bias = 0;
  std::size_t in = 0;
  std::size_t out = 0;
};

Dense add_dense(ad::ParameterStore& params, const std::string& prefix, std::size_t in,
                std::size_t out, Rng& rng);

// x (in) -> (out), or X (n, in) -> (n, out).
ad::Var apply_dense(ad::Tape& tape, ad::ParameterStore& params, const Dense& layer, ad::Var x);

struct LstmCell {
  std::size_t units = 0;
  std::size_t input = 0;
  // Gate weights over concat(x, h_prev), each (input + units, units).
  std::size_t w_input = 0, w_forget = 0, w_cell = 0, w_output = 0;
  std::size_t b_input = 0, b_forget = 0, b_cell = 0, b_output = 0;
};

struct ChronoBiases {
  std::vector<double> forget;
  std::vector<double> input;
};

// forget = log(u), u ~ Uniform(1, t_max - 1); input = -forget.
ChronoBiases chrono_biases(std::size_t units, int t_max, Rng& rng);

// Gate biases come from `biases`; weights are Glorot-uniform.
LstmCell add_lstm(ad::ParameterStore& params, const std::string& prefix, std::size_t input,
                  std::size_t units, const ChronoBiases& biases, Rng& rng);

// Unit forget bias, zero elsewhere.
ChronoBiases standard_biases(std::size_t units);

struct LstmState {
  ad::Var hidden;
  ad::Var cell;
};

LstmState lstm_step(ad::Tape& tape, ad::ParameterStore& params, const LstmCell& cell,
                    ad::Var x, ad::Var h_prev, ad::Var c_prev);

std::vector<double> glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace redp::nn

#endif  // REDP_NN_HPP_

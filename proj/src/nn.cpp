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

#include "redp/nn.hpp"

#include <cmath>

#include "redp/error.hpp"

namespace redp::nn {

using ad::Tensor;
using ad::Var;

std::vector<double> glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> w(fan_in * fan_out);
  for (auto& v : w) v = rng.uniform(-limit, limit);
  return w;
}

Dense add_dense(ad::ParameterStore& params, const std::string& prefix, std::size_t in,
                std::size_t out, Rng& rng) {
  Dense d;
  d.in = in;
  d.out = out;
  d.weight = params.add(prefix + "/w", Tensor::matrix(in, out, glorot_uniform(in, out, rng)));
  d.bias = params.add(prefix + "/b", Tensor::zeros({out}));
  return d;
}

Var apply_dense(ad::Tape& tape, ad::ParameterStore& params, const Dense& layer, Var x) {
  Var w = tape.param(params, layer.weight);
  Var b = tape.param(params, layer.bias);
  return tape.add(tape.matmul(x, w), b);
}

ChronoBiases chrono_biases(std::size_t units, int t_max, Rng& rng) {
  if (t_max < 2) throw Error(ErrorKind::kSchemaViolation, "chrono horizon must be at least 2");
  ChronoBiases out;
  out.forget.resize(units);
  out.input.resize(units);
  for (std::size_t i = 0; i < units; ++i) {
    double u = rng.uniform(1.0, static_cast<double>(t_max - 1));
    out.forget[i] = std::log(u);
    out.input[i] = -out.forget[i];
  }
  return out;
}

ChronoBiases standard_biases(std::size_t units) {
  return ChronoBiases{std::vector<double>(units, 1.0), std::vector<double>(units, 0.0)};
}

LstmCell add_lstm(ad::ParameterStore& params, const std::string& prefix, std::size_t input,
                  std::size_t units, const ChronoBiases& biases, Rng& rng) {
  LstmCell c;
  c.units = units;
  c.input = input;
  const std::size_t fan_in = input + units;
  auto weight = [&](const char* gate) {
    return params.add(prefix + "/w_" + gate,
                      Tensor::matrix(fan_in, units, glorot_uniform(fan_in, units, rng)));
  };
  c.w_input = weight("input");
  c.w_forget = weight("forget");
  c.w_cell = weight("cell");
  c.w_output = weight("output");
  c.b_input = params.add(prefix + "/b_input", Tensor::vector(biases.input));
  c.b_forget = params.add(prefix + "/b_forget", Tensor::vector(biases.forget));
  c.b_cell = params.add(prefix + "/b_cell", Tensor::zeros({units}));
  c.b_output = params.add(prefix + "/b_output", Tensor::zeros({units}));
  return c;
}

LstmState lstm_step(ad::Tape& tape, ad::ParameterStore& params, const LstmCell& cell, Var x,
                    Var h_prev, Var c_prev) {
  Var xh_parts[2] = {x, h_prev};
  Var xh = tape.concat(xh_parts);
  auto gate = [&](std::size_t w, std::size_t b) {
    return tape.add(tape.matmul(xh, tape.param(params, w)), tape.param(params, b));
  };
  Var i = tape.sigmoid(gate(cell.w_input, cell.b_input));
  Var f = tape.sigmoid(gate(cell.w_forget, cell.b_forget));
  Var g = tape.tanh(gate(cell.w_cell, cell.b_cell));
  Var o = tape.sigmoid(gate(cell.w_output, cell.b_output));
  Var c = tape.add(tape.mul(f, c_prev), tape.mul(i, g));
  Var h = tape.mul(o, tape.tanh(c));
  return {h, c};
}

}  // namespace redp::nn

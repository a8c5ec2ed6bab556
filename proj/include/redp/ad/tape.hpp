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

#ifndef REDP_AD_TAPE_HPP_
#define REDP_AD_TAPE_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "redp/ad/tensor.hpp"
#include "redp/rng.hpp"

namespace redp::ad {

struct Var {
  std::uint32_t id = UINT32_MAX;
  bool valid() const { return id != UINT32_MAX; }
};

enum class Op : std::uint8_t {
  kLeaf,
  kMatmul,
  kAdd,
  kSub,
  kMul,
  kConcat,
  kStack,
  kTanh,
  kSigmoid,
  kRelu,
  kSoftmax,
  kLog,
  kExp,
  kConv1d,
  kDropout,
  kL2Normalize,
  kCosine,
  kReduceSum,
  kReduceMean,
  kReduceMax,
  kScale,
};

// Optional arguments for the name-based apply() entry point.
struct OpAttrs {
  int axis = -1;
  double rate = 0.0;
  double eps = 1e-12;
  bool train = false;
  Rng* rng = nullptr;
  std::vector<std::uint8_t> mask;
  std::vector<double> fixed_mask;
};

// Reverse-mode tape over rank-1 and rank-2 tensors. Nodes are recorded in
// creation order, which is a topological order. Node storage is recycled
// across clear() calls.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void clear();
  std::size_t size() const { return used_; }

  Var constant(const Tensor& t);
  Var constant(std::span<const double> data, const Shape& shape);
  Var vector(std::span<const double> data);
  Var scalar(double value);
  // Repeated calls for the same parameter return the same node.
  Var param(ParameterStore& store, std::size_t index);

  // (n)x(n,p)->(p), (m,n)x(n)->(m), (m,n)x(n,p)->(m,p), (n)x(n)->(1)
  Var matmul(Var a, Var b);
  // Same shape, or (m,k) with a (k) row broadcast.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  // Rank-1 inputs along axis 0, or rank-2 inputs along axis 0 or 1.
  Var concat(std::span<const Var> inputs, int axis = 0);
  // Rank-1 inputs of equal length become rows of a matrix.
  Var stack(std::span<const Var> rows);
  Var tanh(Var x);
  Var sigmoid(Var x);
  Var relu(Var x);
  // Along the last axis. Masked positions (mask[i] == 0) get exactly zero.
  Var softmax(Var x, std::span<const std::uint8_t> mask = {});
  // Argument clamped below at 1e-300.
  Var log(Var x);
  // Argument clamped above at 700.
  Var exp(Var x);
  // kernel = [s(-1), s(0), s(+1)], zero-padded, output length = input length:
  // out[j] = s(-1) p[j+1] + s(0) p[j] + s(+1) p[j-1].
  Var conv1d(Var probs, Var kernel);
  // Inverted dropout; identity when !train or rate == 0.
  Var dropout(Var x, double rate, bool train, Rng& rng);
  Var dropout_with_mask(Var x, std::span<const double> mask);
  // Along the last axis; norms are floored at eps.
  Var l2_normalize(Var x, double eps = 1e-12);
  // (d)·(d) -> (1), or (d) against each row of (k,d) -> (k).
  Var cosine_similarity(Var a, Var b, double eps = 1e-12);
  // axis -1 reduces everything to (1).
  Var reduce_sum(Var x, int axis = -1);
  Var reduce_mean(Var x, int axis = -1);
  // axis -1 or, for rank 2, axis 1. Ties go to the first maximum.
  Var reduce_max(Var x, int axis = -1);
  // (1) times anything.
  Var scale(Var s, Var x);

  // Name-based entry point. Throws UnknownPrimitive.
  Var apply(std::string_view primitive, std::span<const Var> inputs,
            const OpAttrs& attrs = {});

  std::span<const double> data(Var v) const;
  Shape shape(Var v) const;
  Tensor value(Var v) const;
  double item(Var v) const;
  // Zero-length until backward() has reached the node.
  std::span<const double> grad(Var v) const;

  // Hash of every non-differentiable decision on the tape: relu signs,
  // max positions and constant inputs. Two evaluations with equal
  // signatures lie on the same smooth piece of the function.
  std::uint64_t branch_signature() const;

  // Propagates d(loss)/d(node) and adds parameter gradients into their
  // stores. Throws NonScalarLoss.
  void backward(Var loss);

 private:
  struct Node {
    Op op = Op::kLeaf;
    std::uint8_t rank = 1;
    std::size_t rows = 0;  // rank 1: length
    std::size_t cols = 1;
    std::vector<double> value;
    std::vector<double> grad;
    std::vector<double> aux;
    std::vector<std::uint32_t> inputs;
    double attr = 0.0;
    int axis = -1;
    bool requires_grad = false;
    bool touched = false;
    ParameterStore* store = nullptr;
    std::size_t param_index = 0;

    std::size_t size() const { return rows * cols; }
  };

  Node& node(Var v);
  const Node& node(Var v) const;
  Var push(Op op, std::uint8_t rank, std::size_t rows, std::size_t cols,
           std::initializer_list<Var> inputs);
  std::vector<double>& grad_buffer(std::uint32_t id);
  void backward_node(std::uint32_t id);
  Var unary(Op op, Var x);

  std::vector<Node> nodes_;
  std::size_t used_ = 0;
  std::map<std::pair<const ParameterStore*, std::size_t>, std::uint32_t> param_nodes_;
};

}  // namespace redp::ad

#endif  // REDP_AD_TAPE_HPP_

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

#include "redp/ad/tape.hpp"

#include <bit>

#include <algorithm>
#include <cmath>
#include <string>

#include "redp/error.hpp"
#include "redp/kernels/kernels.hpp"

namespace redp::ad {

namespace {

constexpr double kLogFloor = 1e-300;
constexpr double kExpCeiling = 700.0;

[[noreturn]] void shape_error(const std::string& what) {
  throw Error(ErrorKind::kShapeMismatch, what);
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tape::Node& Tape::node(Var v) {
  if (v.id >= used_) shape_error("variable does not belong to this tape");
  return nodes_[v.id];
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= used_) shape_error("variable does not belong to this tape");
  return nodes_[v.id];
}

void Tape::clear() {
  used_ = 0;
  param_nodes_.clear();
}

Var Tape::push(Op op, std::uint8_t rank, std::size_t rows, std::size_t cols,
               std::initializer_list<Var> inputs) {
  bool needs = false;
  for (Var in : inputs) needs = needs || node(in).requires_grad;
  if (used_ == nodes_.size()) nodes_.emplace_back();
  Node& n = nodes_[used_];
  n.op = op;
  n.rank = rank;
  n.rows = rows;
  n.cols = cols;
  n.value.assign(rows * cols, 0.0);
  n.aux.clear();
  n.inputs.clear();
  for (Var in : inputs) n.inputs.push_back(in.id);
  n.attr = 0.0;
  n.axis = -1;
  n.requires_grad = needs;
  n.touched = false;
  n.store = nullptr;
  n.param_index = 0;
  return Var{static_cast<std::uint32_t>(used_++)};
}

Var Tape::constant(std::span<const double> data, const Shape& shape) {
  if (shape.empty() || shape.size() > 2 || shape_size(shape) != data.size()) {
    shape_error("constant of shape " + shape_string(shape) + " with " +
                std::to_string(data.size()) + " values");
  }
  Var v = push(Op::kLeaf, static_cast<std::uint8_t>(shape.size()), shape[0],
               shape.size() == 2 ? shape[1] : 1, {});
  std::copy(data.begin(), data.end(), nodes_[v.id].value.begin());
  return v;
}

Var Tape::constant(const Tensor& t) { return constant(t.data, t.shape); }

Var Tape::vector(std::span<const double> data) { return constant(data, {data.size()}); }

Var Tape::scalar(double value) {
  double v[1] = {value};
  return constant(v, {1});
}

std::uint64_t Tape::branch_signature() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ULL;
  };
  for (std::size_t id = 0; id < used_; ++id) {
    const Node& n = nodes_[id];
    switch (n.op) {
      case Op::kRelu:
        for (double v : nodes_[n.inputs[0]].value) mix(v > 0.0 ? 1 : 2);
        break;
      case Op::kReduceMax:
        for (double v : n.aux) mix(static_cast<std::uint64_t>(v));
        break;
      case Op::kLeaf:
        if (n.store == nullptr) {
          for (double v : n.value) mix(std::bit_cast<std::uint64_t>(v));
        }
        break;
      default:
        break;
    }
  }
  return h;
}

Var Tape::param(ParameterStore& store, std::size_t index) {
  auto key = std::make_pair(static_cast<const ParameterStore*>(&store), index);
  if (auto it = param_nodes_.find(key); it != param_nodes_.end()) return Var{it->second};
  const Parameter& p = store.at(index);
  Var v = constant(p.value);
  Node& n = nodes_[v.id];
  n.requires_grad = p.trainable;
  n.store = &store;
  n.param_index = index;
  param_nodes_[key] = v.id;
  return v;
}

Var Tape::matmul(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  std::size_t m = na.rank == 1 ? 1 : na.rows;
  std::size_t n = na.rank == 1 ? na.rows : na.cols;
  std::size_t bn = nb.rows;
  std::size_t p = nb.rank == 1 ? 1 : nb.cols;
  if (n != bn) {
    shape_error("matmul inner dimensions " + std::to_string(n) + " vs " + std::to_string(bn));
  }
  std::uint8_t rank = 1;
  std::size_t rows = 0, cols = 1;
  if (na.rank == 1 && nb.rank == 1) {
    rows = 1;
  } else if (na.rank == 1) {
    rows = p;
  } else if (nb.rank == 1) {
    rows = m;
  } else {
    rank = 2;
    rows = m;
    cols = p;
  }
  Var out = push(Op::kMatmul, rank, rows, cols, {a, b});
  const double* A = nodes_[a.id].value.data();
  const double* B = nodes_[b.id].value.data();
  double* C = nodes_[out.id].value.data();
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < m; ++i) {
    if (p == 1) {
      C[i] = k.dot(A + i * n, B, n);
      continue;
    }
    double* row = C + i * p;
    for (std::size_t j = 0; j < n; ++j) {
      double aij = A[i * n + j];
      if (aij != 0.0) k.axpy(aij, B + j * p, row, p);
    }
  }
  return out;
}

Var Tape::add(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  bool same = na.rank == nb.rank && na.rows == nb.rows && na.cols == nb.cols;
  bool rowcast = na.rank == 2 && nb.rank == 1 && nb.rows == na.cols;
  if (!same && !rowcast) shape_error("add: incompatible shapes");
  Var out = push(Op::kAdd, na.rank, na.rows, na.cols, {a, b});
  const auto& A = nodes_[a.id].value;
  const auto& B = nodes_[b.id].value;
  auto& C = nodes_[out.id].value;
  std::size_t width = nodes_[b.id].size();
  for (std::size_t i = 0; i < C.size(); ++i) C[i] = A[i] + B[same ? i : i % width];
  return out;
}

Var Tape::sub(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  bool same = na.rank == nb.rank && na.rows == nb.rows && na.cols == nb.cols;
  bool rowcast = na.rank == 2 && nb.rank == 1 && nb.rows == na.cols;
  if (!same && !rowcast) shape_error("sub: incompatible shapes");
  Var out = push(Op::kSub, na.rank, na.rows, na.cols, {a, b});
  const auto& A = nodes_[a.id].value;
  const auto& B = nodes_[b.id].value;
  auto& C = nodes_[out.id].value;
  std::size_t width = nodes_[b.id].size();
  for (std::size_t i = 0; i < C.size(); ++i) C[i] = A[i] - B[same ? i : i % width];
  return out;
}

Var Tape::mul(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.rank != nb.rank || na.rows != nb.rows || na.cols != nb.cols) {
    shape_error("mul: shapes differ");
  }
  Var out = push(Op::kMul, na.rank, na.rows, na.cols, {a, b});
  const auto& A = nodes_[a.id].value;
  const auto& B = nodes_[b.id].value;
  auto& C = nodes_[out.id].value;
  for (std::size_t i = 0; i < C.size(); ++i) C[i] = A[i] * B[i];
  return out;
}

Var Tape::concat(std::span<const Var> inputs, int axis) {
  if (inputs.empty()) shape_error("concat of nothing");
  const Node& first = node(inputs[0]);
  std::uint8_t rank = first.rank;
  std::size_t rows = 0, cols = first.cols;
  if (rank == 1) {
    if (axis != 0 && axis != -1) shape_error("concat: rank-1 inputs need axis 0");
    for (Var v : inputs) {
      if (node(v).rank != 1) shape_error("concat: mixed ranks");
      rows += node(v).rows;
    }
    cols = 1;
  } else if (axis == 0) {
    for (Var v : inputs) {
      if (node(v).rank != 2 || node(v).cols != cols) shape_error("concat: column mismatch");
      rows += node(v).rows;
    }
  } else if (axis == 1 || axis == -1) {
    rows = first.rows;
    cols = 0;
    for (Var v : inputs) {
      if (node(v).rank != 2 || node(v).rows != rows) shape_error("concat: row mismatch");
      cols += node(v).cols;
    }
  } else {
    shape_error("concat: bad axis");
  }
  Var out = push(Op::kConcat, rank, rows, cols, {});
  Node& n = nodes_[out.id];
  n.axis = (rank == 2 && axis != 0) ? 1 : 0;
  for (Var v : inputs) {
    n.inputs.push_back(v.id);
    n.requires_grad = n.requires_grad || nodes_[v.id].requires_grad;
  }
  if (n.axis == 0) {
    std::size_t off = 0;
    for (Var v : inputs) {
      const auto& src = nodes_[v.id].value;
      std::copy(src.begin(), src.end(), n.value.begin() + static_cast<std::ptrdiff_t>(off));
      off += src.size();
    }
  } else {
    std::size_t col_off = 0;
    for (Var v : inputs) {
      const Node& src = nodes_[v.id];
      for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(src.value.begin() + static_cast<std::ptrdiff_t>(r * src.cols), src.cols,
                    n.value.begin() + static_cast<std::ptrdiff_t>(r * cols + col_off));
      }
      col_off += src.cols;
    }
  }
  return out;
}

Var Tape::stack(std::span<const Var> rows) {
  if (rows.empty()) shape_error("stack of nothing");
  std::size_t width = node(rows[0]).rows;
  for (Var v : rows) {
    if (node(v).rank != 1 || node(v).rows != width) shape_error("stack: row length mismatch");
  }
  Var out = push(Op::kStack, 2, rows.size(), width, {});
  Node& n = nodes_[out.id];
  std::size_t off = 0;
  for (Var v : rows) {
    n.inputs.push_back(v.id);
    n.requires_grad = n.requires_grad || nodes_[v.id].requires_grad;
    const auto& src = nodes_[v.id].value;
    std::copy(src.begin(), src.end(), n.value.begin() + static_cast<std::ptrdiff_t>(off));
    off += width;
  }
  return out;
}

Var Tape::unary(Op op, Var x) {
  const Node& nx = node(x);
  Var out = push(op, nx.rank, nx.rows, nx.cols, {x});
  const auto& X = nodes_[x.id].value;
  auto& Y = nodes_[out.id].value;
  for (std::size_t i = 0; i < Y.size(); ++i) {
    double v = X[i];
    switch (op) {
      case Op::kTanh: Y[i] = std::tanh(v); break;
      case Op::kSigmoid: Y[i] = stable_sigmoid(v); break;
      case Op::kRelu: Y[i] = v > 0.0 ? v : 0.0; break;
      case Op::kLog: Y[i] = std::log(std::max(v, kLogFloor)); break;
      case Op::kExp: Y[i] = std::exp(std::min(v, kExpCeiling)); break;
      default: shape_error("not a unary op");
    }
  }
  return out;
}

Var Tape::tanh(Var x) { return unary(Op::kTanh, x); }
Var Tape::sigmoid(Var x) { return unary(Op::kSigmoid, x); }
Var Tape::relu(Var x) { return unary(Op::kRelu, x); }
Var Tape::log(Var x) { return unary(Op::kLog, x); }
Var Tape::exp(Var x) { return unary(Op::kExp, x); }

Var Tape::softmax(Var x, std::span<const std::uint8_t> mask) {
  const Node& nx = node(x);
  if (!mask.empty() && mask.size() != nx.size()) shape_error("softmax: mask length");
  Var out = push(Op::kSoftmax, nx.rank, nx.rows, nx.cols, {x});
  Node& n = nodes_[out.id];
  const auto& X = nodes_[x.id].value;
  std::size_t width = n.rank == 1 ? n.rows : n.cols;
  std::size_t count = n.size() / width;
  for (std::size_t r = 0; r < count; ++r) {
    const double* xr = X.data() + r * width;
    double* yr = n.value.data() + r * width;
    auto keep = [&](std::size_t i) { return mask.empty() || mask[r * width + i] != 0; };
    double mx = -INFINITY;
    for (std::size_t i = 0; i < width; ++i) {
      if (keep(i)) mx = std::max(mx, xr[i]);
    }
    if (mx == -INFINITY) continue;  // fully masked row stays zero
    double total = 0.0;
    for (std::size_t i = 0; i < width; ++i) {
      yr[i] = keep(i) ? std::exp(xr[i] - mx) : 0.0;
      total += yr[i];
    }
    for (std::size_t i = 0; i < width; ++i) yr[i] /= total;
  }
  return out;
}

Var Tape::conv1d(Var probs, Var kernel) {
  const Node& np = node(probs);
  const Node& nk = node(kernel);
  if (np.rank != 1) shape_error("conv1d: probabilities must be rank 1");
  if (nk.size() != 3) shape_error("conv1d: kernel must have 3 taps");
  Var out = push(Op::kConv1d, 1, np.rows, 1, {probs, kernel});
  const auto& P = nodes_[probs.id].value;
  const auto& K = nodes_[kernel.id].value;
  auto& Y = nodes_[out.id].value;
  const std::size_t m = P.size();
  for (std::size_t j = 0; j < m; ++j) {
    double acc = K[1] * P[j];
    if (j + 1 < m) acc += K[0] * P[j + 1];
    if (j > 0) acc += K[2] * P[j - 1];
    Y[j] = acc;
  }
  return out;
}

Var Tape::dropout(Var x, double rate, bool train, Rng& rng) {
  if (!train || rate <= 0.0) return x;
  if (rate >= 1.0) shape_error("dropout rate must be below 1");
  std::vector<double> mask(node(x).size());
  const double keep_scale = 1.0 / (1.0 - rate);
  for (auto& m : mask) m = rng.uniform() < rate ? 0.0 : keep_scale;
  return dropout_with_mask(x, mask);
}

Var Tape::dropout_with_mask(Var x, std::span<const double> mask) {
  const Node& nx = node(x);
  if (mask.size() != nx.size()) shape_error("dropout: mask length");
  Var out = push(Op::kDropout, nx.rank, nx.rows, nx.cols, {x});
  Node& n = nodes_[out.id];
  n.aux.assign(mask.begin(), mask.end());
  const auto& X = nodes_[x.id].value;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = X[i] * n.aux[i];
  return out;
}

Var Tape::l2_normalize(Var x, double eps) {
  const Node& nx = node(x);
  Var out = push(Op::kL2Normalize, nx.rank, nx.rows, nx.cols, {x});
  Node& n = nodes_[out.id];
  n.attr = eps;
  const auto& X = nodes_[x.id].value;
  std::size_t width = n.rank == 1 ? n.rows : n.cols;
  std::size_t count = n.size() / width;
  n.aux.resize(count);
  const auto& k = kernels::active();
  for (std::size_t r = 0; r < count; ++r) {
    const double* xr = X.data() + r * width;
    double norm = std::sqrt(k.dot(xr, xr, width));
    n.aux[r] = norm;
    double denom = std::max(norm, eps);
    for (std::size_t i = 0; i < width; ++i) n.value[r * width + i] = xr[i] / denom;
  }
  return out;
}

Var Tape::cosine_similarity(Var a, Var b, double eps) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.rank != 1) shape_error("cosine_similarity: first argument must be rank 1");
  std::size_t d = na.rows;
  std::size_t count = nb.rank == 1 ? 1 : nb.rows;
  std::size_t width = nb.rank == 1 ? nb.rows : nb.cols;
  if (width != d) shape_error("cosine_similarity: dimension mismatch");
  Var out = push(Op::kCosine, 1, count, 1, {a, b});
  Node& n = nodes_[out.id];
  n.attr = eps;
  const double* A = nodes_[a.id].value.data();
  const double* B = nodes_[b.id].value.data();
  const auto& k = kernels::active();
  // aux = [|a|, |b_0|, ..., |b_{count-1}|], unfloored
  n.aux.resize(count + 1);
  n.aux[0] = std::sqrt(k.dot(A, A, d));
  double norm_a = std::max(n.aux[0], eps);
  for (std::size_t j = 0; j < count; ++j) {
    const double* bj = B + j * d;
    n.aux[j + 1] = std::sqrt(k.dot(bj, bj, d));
    double norm_b = std::max(n.aux[j + 1], eps);
    n.value[j] = k.dot(A, bj, d) / (norm_a * norm_b);
  }
  return out;
}

Var Tape::reduce_sum(Var x, int axis) {
  const Node& nx = node(x);
  std::size_t rows = nx.rows, cols = nx.cols;
  if (axis == -1 || (nx.rank == 1 && axis == 0)) {
    Var out = push(Op::kReduceSum, 1, 1, 1, {x});
    nodes_[out.id].axis = -1;
    nodes_[out.id].value[0] = kernels::active().sum(nodes_[x.id].value.data(), rows * cols);
    return out;
  }
  if (nx.rank != 2 || (axis != 0 && axis != 1)) shape_error("reduce_sum: bad axis");
  Var out = push(Op::kReduceSum, 1, axis == 0 ? cols : rows, 1, {x});
  Node& n = nodes_[out.id];
  n.axis = axis;
  const auto& X = nodes_[x.id].value;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) n.value[axis == 0 ? c : r] += X[r * cols + c];
  }
  return out;
}

Var Tape::reduce_mean(Var x, int axis) {
  Var s = reduce_sum(x, axis);
  Node& n = nodes_[s.id];
  const Node& nx = nodes_[x.id];
  std::size_t count = n.axis == -1 ? nx.size() : (n.axis == 0 ? nx.rows : nx.cols);
  n.op = Op::kReduceMean;
  n.attr = 1.0 / static_cast<double>(count);
  for (auto& v : n.value) v *= n.attr;
  return s;
}

Var Tape::reduce_max(Var x, int axis) {
  const Node& nx = node(x);
  if (nx.size() == 0) shape_error("reduce_max of empty tensor");
  std::size_t width, count;
  if (axis == -1 || (nx.rank == 1 && axis == 0)) {
    width = nx.size();
    count = 1;
    axis = -1;
  } else if (nx.rank == 2 && axis == 1) {
    width = nx.cols;
    count = nx.rows;
  } else {
    shape_error("reduce_max: unsupported axis");
  }
  Var out = push(Op::kReduceMax, 1, count, 1, {x});
  Node& n = nodes_[out.id];
  n.axis = axis;
  n.aux.resize(count);
  const auto& X = nodes_[x.id].value;
  for (std::size_t r = 0; r < count; ++r) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < width; ++i) {
      if (X[r * width + i] > X[r * width + best]) best = i;
    }
    n.aux[r] = static_cast<double>(best);
    n.value[r] = X[r * width + best];
  }
  return out;
}

Var Tape::scale(Var s, Var x) {
  if (node(s).size() != 1) shape_error("scale: factor must be a scalar");
  const Node& nx = node(x);
  Var out = push(Op::kScale, nx.rank, nx.rows, nx.cols, {s, x});
  double factor = nodes_[s.id].value[0];
  const auto& X = nodes_[x.id].value;
  auto& Y = nodes_[out.id].value;
  for (std::size_t i = 0; i < Y.size(); ++i) Y[i] = factor * X[i];
  return out;
}

Var Tape::apply(std::string_view primitive, std::span<const Var> inputs,
                const OpAttrs& attrs) {
  auto need = [&](std::size_t n) {
    if (inputs.size() != n) {
      shape_error(std::string(primitive) + " takes " + std::to_string(n) + " inputs");
    }
  };
  if (primitive == "matmul") { need(2); return matmul(inputs[0], inputs[1]); }
  if (primitive == "add") { need(2); return add(inputs[0], inputs[1]); }
  if (primitive == "sub") { need(2); return sub(inputs[0], inputs[1]); }
  if (primitive == "mul") { need(2); return mul(inputs[0], inputs[1]); }
  if (primitive == "concat") return concat(inputs, attrs.axis);
  if (primitive == "stack") return stack(inputs);
  if (primitive == "tanh") { need(1); return tanh(inputs[0]); }
  if (primitive == "sigmoid") { need(1); return sigmoid(inputs[0]); }
  if (primitive == "relu") { need(1); return relu(inputs[0]); }
  if (primitive == "softmax") { need(1); return softmax(inputs[0], attrs.mask); }
  if (primitive == "log") { need(1); return log(inputs[0]); }
  if (primitive == "exp") { need(1); return exp(inputs[0]); }
  if (primitive == "conv1d") { need(2); return conv1d(inputs[0], inputs[1]); }
  if (primitive == "dropout") {
    need(1);
    if (!attrs.fixed_mask.empty()) return dropout_with_mask(inputs[0], attrs.fixed_mask);
    if (attrs.train && attrs.rate > 0.0 && attrs.rng == nullptr) {
      shape_error("dropout in training mode needs an rng");
    }
    if (!attrs.train || attrs.rate <= 0.0) return inputs[0];
    return dropout(inputs[0], attrs.rate, attrs.train, *attrs.rng);
  }
  if (primitive == "l2_normalize") { need(1); return l2_normalize(inputs[0], attrs.eps); }
  if (primitive == "cosine_similarity") {
    need(2);
    return cosine_similarity(inputs[0], inputs[1], attrs.eps);
  }
  if (primitive == "reduce_sum") { need(1); return reduce_sum(inputs[0], attrs.axis); }
  if (primitive == "reduce_mean") { need(1); return reduce_mean(inputs[0], attrs.axis); }
  if (primitive == "reduce_max") { need(1); return reduce_max(inputs[0], attrs.axis); }
  if (primitive == "scale") { need(2); return scale(inputs[0], inputs[1]); }
  throw Error(ErrorKind::kUnknownPrimitive, "no primitive named '" + std::string(primitive) + "'");
}

std::span<const double> Tape::data(Var v) const { return node(v).value; }

Shape Tape::shape(Var v) const {
  const Node& n = node(v);
  if (n.rank == 1) return {n.rows};
  return {n.rows, n.cols};
}

Tensor Tape::value(Var v) const { return Tensor(shape(v), node(v).value); }

double Tape::item(Var v) const {
  const Node& n = node(v);
  if (n.size() != 1) shape_error("item() on a non-scalar");
  return n.value[0];
}

std::span<const double> Tape::grad(Var v) const {
  const Node& n = node(v);
  if (!n.touched) return {};
  return n.grad;
}

std::vector<double>& Tape::grad_buffer(std::uint32_t id) {
  Node& n = nodes_[id];
  if (!n.touched) {
    n.grad.assign(n.size(), 0.0);
    n.touched = true;
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  if (node(loss).size() != 1) {
    throw Error(ErrorKind::kNonScalarLoss, "loss has " + std::to_string(node(loss).size()) +
                                               " elements");
  }
  for (std::size_t i = 0; i < used_; ++i) nodes_[i].touched = false;
  if (!nodes_[loss.id].requires_grad) return;
  grad_buffer(loss.id)[0] = 1.0;
  for (std::int64_t id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.touched || !n.requires_grad) continue;
    if (n.op == Op::kLeaf) {
      if (n.store) {
        Parameter& p = n.store->at(n.param_index);
        if (p.grad.size() != n.size()) p.grad.assign(n.size(), 0.0);
        kernels::active().axpy(1.0, n.grad.data(), p.grad.data(), n.size());
      }
      continue;
    }
    backward_node(static_cast<std::uint32_t>(id));
  }
}

void Tape::backward_node(std::uint32_t id) {
  const auto& k = kernels::active();
  // Input gradient buffers are requested before taking references to this
  // node, since grad_buffer may touch other nodes only (no reallocation).
  Node& n = nodes_[id];
  const std::vector<double>& dy = n.grad;
  auto in = [&](std::size_t i) -> Node& { return nodes_[n.inputs[i]]; };
  auto wants = [&](std::size_t i) { return in(i).requires_grad; };

  switch (n.op) {
    case Op::kLeaf:
      return;
    case Op::kMatmul: {
      Node& na = in(0);
      Node& nb = in(1);
      std::size_t m = na.rank == 1 ? 1 : na.rows;
      std::size_t inner = na.rank == 1 ? na.rows : na.cols;
      std::size_t p = nb.rank == 1 ? 1 : nb.cols;
      const double* A = na.value.data();
      const double* B = nb.value.data();
      if (wants(0)) {
        double* dA = grad_buffer(n.inputs[0]).data();
        for (std::size_t i = 0; i < m; ++i) {
          if (p == 1) {
            k.axpy(dy[i], B, dA + i * inner, inner);
          } else {
            for (std::size_t j = 0; j < inner; ++j) {
              dA[i * inner + j] += k.dot(dy.data() + i * p, B + j * p, p);
            }
          }
        }
      }
      if (wants(1)) {
        double* dB = grad_buffer(n.inputs[1]).data();
        for (std::size_t i = 0; i < m; ++i) {
          if (p == 1) {
            k.axpy(dy[i], A + i * inner, dB, inner);
          } else {
            for (std::size_t j = 0; j < inner; ++j) {
              double aij = A[i * inner + j];
              if (aij != 0.0) k.axpy(aij, dy.data() + i * p, dB + j * p, p);
            }
          }
        }
      }
      return;
    }
    case Op::kAdd:
    case Op::kSub: {
      double sign = n.op == Op::kAdd ? 1.0 : -1.0;
      if (wants(0)) k.axpy(1.0, dy.data(), grad_buffer(n.inputs[0]).data(), dy.size());
      if (wants(1)) {
        auto& db = grad_buffer(n.inputs[1]);
        if (db.size() == dy.size()) {
          k.axpy(sign, dy.data(), db.data(), dy.size());
        } else {
          std::size_t width = db.size();
          for (std::size_t r = 0; r < dy.size() / width; ++r) {
            k.axpy(sign, dy.data() + r * width, db.data(), width);
          }
        }
      }
      return;
    }
    case Op::kMul: {
      if (wants(0)) k.mul_acc(dy.data(), in(1).value.data(), grad_buffer(n.inputs[0]).data(), dy.size());
      if (wants(1)) k.mul_acc(dy.data(), in(0).value.data(), grad_buffer(n.inputs[1]).data(), dy.size());
      return;
    }
    case Op::kConcat:
    case Op::kStack: {
      if (n.op == Op::kStack || n.axis == 0) {
        std::size_t off = 0;
        for (std::size_t i = 0; i < n.inputs.size(); ++i) {
          std::size_t len = in(i).size();
          if (wants(i)) k.axpy(1.0, dy.data() + off, grad_buffer(n.inputs[i]).data(), len);
          off += len;
        }
      } else {
        std::size_t col_off = 0;
        for (std::size_t i = 0; i < n.inputs.size(); ++i) {
          std::size_t c = in(i).cols;
          if (wants(i)) {
            double* dx = grad_buffer(n.inputs[i]).data();
            for (std::size_t r = 0; r < n.rows; ++r) {
              k.axpy(1.0, dy.data() + r * n.cols + col_off, dx + r * c, c);
            }
          }
          col_off += c;
        }
      }
      return;
    }
    case Op::kTanh:
    case Op::kSigmoid:
    case Op::kRelu:
    case Op::kLog:
    case Op::kExp: {
      if (!wants(0)) return;
      double* dx = grad_buffer(n.inputs[0]).data();
      const auto& X = in(0).value;
      const auto& Y = n.value;
      for (std::size_t i = 0; i < dy.size(); ++i) {
        double d = 0.0;
        switch (n.op) {
          case Op::kTanh: d = 1.0 - Y[i] * Y[i]; break;
          case Op::kSigmoid: d = Y[i] * (1.0 - Y[i]); break;
          case Op::kRelu: d = X[i] > 0.0 ? 1.0 : 0.0; break;
          case Op::kLog: d = X[i] > kLogFloor ? 1.0 / X[i] : 0.0; break;
          case Op::kExp: d = X[i] < kExpCeiling ? Y[i] : 0.0; break;
          default: break;
        }
        dx[i] += dy[i] * d;
      }
      return;
    }
    case Op::kSoftmax: {
      if (!wants(0)) return;
      double* dx = grad_buffer(n.inputs[0]).data();
      std::size_t width = n.rank == 1 ? n.rows : n.cols;
      for (std::size_t r = 0; r < n.size() / width; ++r) {
        const double* y = n.value.data() + r * width;
        const double* g = dy.data() + r * width;
        double inner = k.dot(y, g, width);
        for (std::size_t i = 0; i < width; ++i) dx[r * width + i] += y[i] * (g[i] - inner);
      }
      return;
    }
    case Op::kConv1d: {
      const auto& P = in(0).value;
      const auto& K = in(1).value;
      const std::size_t m = P.size();
      if (wants(0)) {
        double* dp = grad_buffer(n.inputs[0]).data();
        for (std::size_t j = 0; j < m; ++j) {
          dp[j] += K[1] * dy[j];
          if (j + 1 < m) dp[j + 1] += K[0] * dy[j];
          if (j > 0) dp[j - 1] += K[2] * dy[j];
        }
      }
      if (wants(1)) {
        double* dk = grad_buffer(n.inputs[1]).data();
        for (std::size_t j = 0; j < m; ++j) {
          dk[1] += dy[j] * P[j];
          if (j + 1 < m) dk[0] += dy[j] * P[j + 1];
          if (j > 0) dk[2] += dy[j] * P[j - 1];
        }
      }
      return;
    }
    case Op::kDropout: {
      if (wants(0)) k.mul_acc(dy.data(), n.aux.data(), grad_buffer(n.inputs[0]).data(), dy.size());
      return;
    }
    case Op::kL2Normalize: {
      if (!wants(0)) return;
      double* dx = grad_buffer(n.inputs[0]).data();
      std::size_t width = n.rank == 1 ? n.rows : n.cols;
      for (std::size_t r = 0; r < n.size() / width; ++r) {
        const double* y = n.value.data() + r * width;
        const double* g = dy.data() + r * width;
        double norm = n.aux[r];
        if (norm > n.attr) {
          double inner = k.dot(y, g, width);
          for (std::size_t i = 0; i < width; ++i) dx[r * width + i] += (g[i] - y[i] * inner) / norm;
        } else {
          for (std::size_t i = 0; i < width; ++i) dx[r * width + i] += g[i] / n.attr;
        }
      }
      return;
    }
    case Op::kCosine: {
      Node& na = in(0);
      Node& nb = in(1);
      const std::size_t d = na.rows;
      const double* A = na.value.data();
      const double* B = nb.value.data();
      const double eps = n.attr;
      const double raw_a = n.aux[0];
      const double norm_a = std::max(raw_a, eps);
      double* da = wants(0) ? grad_buffer(n.inputs[0]).data() : nullptr;
      double* db = wants(1) ? grad_buffer(n.inputs[1]).data() : nullptr;
      for (std::size_t j = 0; j < n.rows; ++j) {
        if (dy[j] == 0.0) continue;
        const double* bj = B + j * d;
        const double raw_b = n.aux[j + 1];
        const double norm_b = std::max(raw_b, eps);
        const double s = n.value[j];
        if (da) {
          k.axpy(dy[j] / (norm_a * norm_b), bj, da, d);
          if (raw_a > eps) k.axpy(-dy[j] * s / (norm_a * norm_a), A, da, d);
        }
        if (db) {
          k.axpy(dy[j] / (norm_a * norm_b), A, db + j * d, d);
          if (raw_b > eps) k.axpy(-dy[j] * s / (norm_b * norm_b), bj, db + j * d, d);
        }
      }
      return;
    }
    case Op::kReduceSum:
    case Op::kReduceMean: {
      if (!wants(0)) return;
      double scale = n.op == Op::kReduceMean ? n.attr : 1.0;
      Node& nx = in(0);
      double* dx = grad_buffer(n.inputs[0]).data();
      if (n.axis == -1) {
        for (std::size_t i = 0; i < nx.size(); ++i) dx[i] += scale * dy[0];
      } else {
        for (std::size_t r = 0; r < nx.rows; ++r) {
          for (std::size_t c = 0; c < nx.cols; ++c) {
            dx[r * nx.cols + c] += scale * dy[n.axis == 0 ? c : r];
          }
        }
      }
      return;
    }
    case Op::kReduceMax: {
      if (!wants(0)) return;
      Node& nx = in(0);
      double* dx = grad_buffer(n.inputs[0]).data();
      std::size_t width = n.axis == -1 ? nx.size() : nx.cols;
      for (std::size_t r = 0; r < n.rows; ++r) {
        dx[r * width + static_cast<std::size_t>(n.aux[r])] += dy[r];
      }
      return;
    }
    case Op::kScale: {
      const double factor = in(0).value[0];
      if (wants(0)) {
        grad_buffer(n.inputs[0])[0] += k.dot(dy.data(), in(1).value.data(), dy.size());
      }
      if (wants(1)) k.axpy(factor, dy.data(), grad_buffer(n.inputs[1]).data(), dy.size());
      return;
    }
  }
}

}  // namespace redp::ad

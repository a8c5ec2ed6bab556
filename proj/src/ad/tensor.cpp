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

#include "redp/ad/tensor.hpp"

#include <algorithm>

#include "redp/error.hpp"

namespace redp::ad {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

Tensor::Tensor(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
  if (shape.empty() || shape_size(shape) != data.size()) {
    throw Error(ErrorKind::kShapeMismatch, "tensor data length " + std::to_string(data.size()) +
                                               " does not match shape " + shape_string(shape));
  }
}

Tensor Tensor::zeros(Shape shape) {
  std::size_t n = shape_size(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::vector(std::vector<double> values) {
  std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

std::size_t ParameterStore::add(std::string name, Tensor value, bool trainable) {
  if (index_.count(name)) {
    throw Error(ErrorKind::kSchemaViolation, "duplicate parameter name '" + name + "'");
  }
  std::size_t idx = params_.size();
  index_[name] = idx;
  std::vector<double> grad(value.size(), 0.0);
  params_.push_back(Parameter{std::move(name), std::move(value), std::move(grad), trainable});
  return idx;
}

std::size_t ParameterStore::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw Error(ErrorKind::kUnknownIdentifier, "no parameter named '" + name + "'");
  }
  return it->second;
}

std::size_t ParameterStore::total_values() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

bool ParameterStore::operator==(const ParameterStore& other) const {
  if (params_.size() != other.params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& a = params_[i];
    const auto& b = other.params_[i];
    if (a.name != b.name || a.trainable != b.trainable || !(a.value == b.value)) return false;
  }
  return true;
}

}  // namespace redp::ad

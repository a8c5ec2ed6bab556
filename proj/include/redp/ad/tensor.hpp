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

#ifndef REDP_AD_TENSOR_HPP_
#define REDP_AD_TENSOR_HPP_

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace redp::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Row-major 64-bit tensor. Scalars have shape {1}.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape);
  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }

  bool operator==(const Tensor&) const = default;
};

struct Parameter {
  std::string name;
  Tensor value;
  std::vector<double> grad;
  bool trainable = true;
};

// Named parameters of one model. Indices are stable once added.
class ParameterStore {
 public:
  std::size_t add(std::string name, Tensor value, bool trainable = true);

  Parameter& at(std::size_t index) { return params_.at(index); }
  const Parameter& at(std::size_t index) const { return params_.at(index); }
  // Throws UnknownIdentifier.
  std::size_t index_of(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::size_t size() const { return params_.size(); }
  std::size_t total_values() const;
  void zero_grad();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  bool operator==(const ParameterStore& other) const;

 private:
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace redp::ad

#endif  // REDP_AD_TENSOR_HPP_

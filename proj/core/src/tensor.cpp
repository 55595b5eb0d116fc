// Copyright 2026 The slungpinn Authors
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

#include "slung/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "slung/errors.hpp"

namespace slung {

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != product(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + slung::shape_string(shape_));
  }
}

Tensor Tensor::row(std::initializer_list<double> values) {
  return Tensor({1, values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

std::size_t Tensor::rows() const {
  if (shape_.size() != 2) {
    throw ShapeError("expected a rank-2 tensor, got " + slung::shape_string(shape_));
  }
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.size() != 2) {
    throw ShapeError("expected a rank-2 tensor, got " + slung::shape_string(shape_));
  }
  return shape_[1];
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

std::string Tensor::shape_string() const { return slung::shape_string(shape_); }

}  // namespace slung

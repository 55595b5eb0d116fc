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

#ifndef SLUNG_TENSOR_HPP_
#define SLUNG_TENSOR_HPP_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace slung {

// Dense row-major tensor of doubles. Arithmetic on the tape is defined for
// rank-2 tensors; other ranks only travel through checkpoints.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor({rows, cols}); }
  static Tensor filled(std::size_t rows, std::size_t cols, double value) {
    return Tensor({rows, cols}, value);
  }
  static Tensor row(std::initializer_list<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Rank-2 extents; throw ShapeError for other ranks.
  std::size_t rows() const;
  std::size_t cols() const;

  double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  const double& operator()(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  void fill(double value);

  // "[2, 3]"
  std::string shape_string() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

}  // namespace slung

#endif  // SLUNG_TENSOR_HPP_

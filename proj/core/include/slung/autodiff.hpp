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

// Define-by-run reverse-mode differentiation over rank-2 tensors.
//
// Every op appends one node to the tape. Because nodes are appended after
// their parents, a single reverse sweep over node indices is a valid
// topological order. A tape is single-threaded; independent tapes may run on
// separate threads as long as they do not share Parameters being written.

#ifndef SLUNG_AUTODIFF_HPP_
#define SLUNG_AUTODIFF_HPP_

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "slung/parameter.hpp"
#include "slung/tensor.hpp"

namespace slung {

class Tape;

// Handle to a node on a tape.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using Backprop = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Non-differentiable input.
  Var constant(Tensor value);
  // Differentiable input; its gradient is read back with grad().
  Var variable(Tensor value);
  // Parameter leaf; backward() adds the node gradient into p.grad.
  Var leaf(Parameter& p);

  const Tensor& value(const Var& v) const { return nodes_[v.id()].value; }
  // Gradient of the last backward() root w.r.t. v (zeros if v was not reached).
  Tensor grad(const Var& v) const;
  bool requires_grad(const Var& v) const { return nodes_[v.id()].requires_grad; }

  // Reverse sweep from a [1, 1] root. A second call without reset() throws.
  // Trainable parameter leaves that receive no gradient are reported through
  // warn() and keep a zero contribution.
  void backward(const Var& root);
  void reset();

  std::size_t size() const { return nodes_.size(); }
  // When set (default), every recorded value is checked for NaN/Inf.
  void set_check_finite(bool on) { check_finite_ = on; }

  // Op-implementation interface.
  Var record(const char* op, Tensor value, std::initializer_list<Var> parents, Backprop backprop);
  Var record(const char* op, Tensor value, const std::vector<Var>& parents, Backprop backprop);
  const Tensor& node_value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& node_grad(std::size_t id) const { return nodes_[id].grad; }
  bool node_requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  // Lazily allocated accumulator for a node's gradient.
  Tensor& grad_slot(std::size_t id);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Backprop backprop;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
  bool check_finite_ = true;
};

// Elementwise, shapes must match exactly.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var neg(const Var& a);
Var scalar_mul(const Var& a, double s);
Var add_scalar(const Var& a, double s);

// [m, k] x [k, n].
Var matmul(const Var& a, const Var& b);
// [m, k] x [k, 1].
Var matvec(const Var& a, const Var& x);
// [r, n] + [1, n] (the only broadcast supported).
Var add_bias(const Var& x, const Var& bias);
// [r, n] with each row i multiplied by s(i, 0), s is [r, 1].
Var scale_rows(const Var& x, const Var& s);

Var concat(const std::vector<Var>& parts, std::size_t axis);
Var slice(const Var& x, std::size_t axis, std::size_t begin, std::size_t end);

Var tanh(const Var& x);
Var sigmoid(const Var& x);
// Exact form x * Phi(x).
Var gelu(const Var& x);
Var sqrt(const Var& x);
Var softmax(const Var& x, std::size_t axis);

// Sum of all entries -> [1, 1].
Var sum(const Var& x);
// Sum along axis 1 -> [r, 1].
Var row_sum(const Var& x);
// w * |x|_F^2 -> [1, 1].
Var weighted_sq_norm(const Var& x, double w);

// Fused kernels for the recurrent model. They are ordinary tape ops with
// hand-written backward passes and are gradient-checked like the primitives.

// LSTM pointwise update. z is the [B, 4H] pre-activation with gate blocks
// ordered (input, forget, cell, output); c is the [B, H] previous cell.
// Returns [B, 2H] = (h', c').
Var lstm_pointwise(const Var& z, const Var& c);

// Additive attention scores. keys is [M*B, A] with row i*B + b holding step i
// of batch entry b; query is [B, A]; v is [A, 1].
// Returns [B, M] with s(b, i) = v . tanh(keys(i*B + b) + query(b)).
Var additive_scores(const Var& keys, const Var& query, const Var& v);

// values is [M*B, H] in the same layout as additive_scores keys, weights is
// [B, M]. Returns [B, H] with row b = sum_i weights(b, i) values(i*B + b).
Var weighted_row_sum(const Var& values, const Var& weights);

// Scalar helpers for the cell-level code.
double gelu_value(double x);
double gelu_derivative(double x);

}  // namespace slung

#endif  // SLUNG_AUTODIFF_HPP_

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

#include "slung/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <string>

#include "slung/errors.hpp"

namespace slung {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap as_matrix(const Tensor& t) {
  return ConstMap(t.data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

MutMap as_matrix(Tensor& t) {
  return MutMap(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

void require_same_tape(const Var& a, const Var& b, const char* op) {
  if (a.tape() == nullptr || a.tape() != b.tape()) {
    throw std::invalid_argument(std::string(op) + ": operands live on different tapes");
  }
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a.value().same_shape(b.value())) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.value().shape_string() + " vs " +
                     b.value().shape_string());
  }
}

void require_rank2(const Var& a, const char* op) {
  if (a.value().rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a rank-2 operand, got " +
                     a.value().shape_string());
  }
}

// Accumulates scale * g into the gradient slot of node id.
void accumulate(Tape& t, std::size_t id, const Tensor& g, double scale = 1.0) {
  if (!t.node_requires_grad(id)) return;
  Tensor& slot = t.grad_slot(id);
  for (std::size_t i = 0; i < g.size(); ++i) slot[i] += scale * g[i];
}

// Elementwise y = fwd(x); backward uses deriv(x, y).
template <typename Fwd, typename Deriv>
Var unary(const char* name, const Var& x, Fwd fwd, Deriv deriv) {
  require_rank2(x, name);
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  const std::size_t xid = x.id();
  return x.tape()->record(name, std::move(out), {x}, [xid, deriv](Tape& t, std::size_t self) {
    if (!t.node_requires_grad(xid)) return;
    const Tensor& g = t.node_grad(self);
    const Tensor& xv = t.node_value(xid);
    const Tensor& yv = t.node_value(self);
    Tensor& slot = t.grad_slot(xid);
    for (std::size_t i = 0; i < g.size(); ++i) slot[i] += g[i] * deriv(xv[i], yv[i]);
  });
}

}  // namespace

const Tensor& Var::value() const {
  if (tape_ == nullptr) throw std::logic_error("use of an unbound Var");
  return tape_->value(*this);
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::variable(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::leaf(Parameter& p) {
  Node n;
  n.value = p.value;
  n.param = &p;
  n.requires_grad = p.trainable;
  return push(std::move(n));
}

Tensor Tape::grad(const Var& v) const {
  const Node& n = nodes_.at(v.id());
  if (n.grad.empty()) return Tensor(n.value.shape());
  return n.grad;
}

Tensor& Tape::grad_slot(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

Var Tape::record(const char* op, Tensor value, std::initializer_list<Var> parents,
                 Backprop backprop) {
  return record(op, std::move(value), std::vector<Var>(parents), std::move(backprop));
}

Var Tape::record(const char* op, Tensor value, const std::vector<Var>& parents,
                 Backprop backprop) {
  if (backward_done_) {
    throw std::logic_error(std::string(op) + ": tape already consumed by backward(); call reset()");
  }
  if (check_finite_ && !value.all_finite()) {
    throw NumericError(std::string("non-finite value produced by '") + op + "'");
  }
  Node n;
  n.value = std::move(value);
  for (const Var& p : parents) {
    if (p.tape() != this) {
      throw std::invalid_argument(std::string(op) + ": operand from a different tape");
    }
    n.requires_grad = n.requires_grad || nodes_[p.id()].requires_grad;
  }
  if (n.requires_grad) n.backprop = std::move(backprop);
  return push(std::move(n));
}

void Tape::backward(const Var& root) {
  if (backward_done_) {
    throw std::logic_error("backward() called twice on the same tape without reset()");
  }
  if (root.tape() != this) throw std::invalid_argument("backward(): root from another tape");
  const Node& r = nodes_.at(root.id());
  if (r.value.size() != 1) {
    throw ShapeError("backward() needs a scalar root, got " + r.value.shape_string());
  }
  backward_done_ = true;
  grad_slot(root.id()).fill(1.0);
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty() || !n.requires_grad || !n.backprop) continue;
    n.backprop(*this, i);
  }
  for (Node& n : nodes_) {
    if (n.param == nullptr || !n.param->trainable) continue;
    if (n.grad.empty()) {
      warn("parameter '" + n.param->name + "' is detached from the loss; gradient is zero");
      continue;
    }
    Parameter& p = *n.param;
    if (!p.grad.same_shape(p.value)) p.grad = Tensor(p.value.shape());
    for (std::size_t k = 0; k < p.grad.size(); ++k) p.grad[k] += n.grad[k];
  }
}

void Tape::reset() {
  nodes_.clear();
  backward_done_ = false;
}

// ---------------------------------------------------------------------------
// Elementwise arithmetic

Var add(const Var& a, const Var& b) {
  require_same_tape(a, b, "add");
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape()->record("add", std::move(out), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    accumulate(t, ai, t.node_grad(self));
    accumulate(t, bi, t.node_grad(self));
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_tape(a, b, "sub");
  require_same_shape(a, b, "sub");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape()->record("sub", std::move(out), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    accumulate(t, ai, t.node_grad(self));
    accumulate(t, bi, t.node_grad(self), -1.0);
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_tape(a, b, "mul");
  require_same_shape(a, b, "mul");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape()->record("mul", std::move(out), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.node_grad(self);
    if (t.node_requires_grad(ai)) {
      const Tensor& bval = t.node_value(bi);
      Tensor& slot = t.grad_slot(ai);
      for (std::size_t i = 0; i < g.size(); ++i) slot[i] += g[i] * bval[i];
    }
    if (t.node_requires_grad(bi)) {
      const Tensor& aval = t.node_value(ai);
      Tensor& slot = t.grad_slot(bi);
      for (std::size_t i = 0; i < g.size(); ++i) slot[i] += g[i] * aval[i];
    }
  });
}

Var neg(const Var& a) { return scalar_mul(a, -1.0); }

Var scalar_mul(const Var& a, double s) {
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
  const std::size_t ai = a.id();
  return a.tape()->record("scalar_mul", std::move(out), {a}, [ai, s](Tape& t, std::size_t self) {
    accumulate(t, ai, t.node_grad(self), s);
  });
}

Var add_scalar(const Var& a, double s) {
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += s;
  const std::size_t ai = a.id();
  return a.tape()->record("add_scalar", std::move(out), {a}, [ai](Tape& t, std::size_t self) {
    accumulate(t, ai, t.node_grad(self));
  });
}

// ---------------------------------------------------------------------------
// Linear algebra

Var matmul(const Var& a, const Var& b) {
  require_same_tape(a, b, "matmul");
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: shape mismatch " + a.value().shape_string() + " x " +
                     b.value().shape_string());
  }
  Tensor out = Tensor::zeros(a.rows(), b.cols());
  as_matrix(out).noalias() = as_matrix(a.value()) * as_matrix(b.value());
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape()->record("matmul", std::move(out), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    const auto g = as_matrix(t.node_grad(self));
    if (t.node_requires_grad(ai)) {
      as_matrix(t.grad_slot(ai)).noalias() += g * as_matrix(t.node_value(bi)).transpose();
    }
    if (t.node_requires_grad(bi)) {
      as_matrix(t.grad_slot(bi)).noalias() += as_matrix(t.node_value(ai)).transpose() * g;
    }
  });
}

Var matvec(const Var& a, const Var& x) {
  require_rank2(x, "matvec");
  if (x.cols() != 1) {
    throw ShapeError("matvec: expected a column vector, got " + x.value().shape_string() +
                     " for matrix " + a.value().shape_string());
  }
  return matmul(a, x);
}

Var add_bias(const Var& x, const Var& bias) {
  require_same_tape(x, bias, "add_bias");
  require_rank2(x, "add_bias");
  require_rank2(bias, "add_bias");
  if (bias.rows() != 1 || bias.cols() != x.cols()) {
    throw ShapeError("add_bias: shape mismatch " + x.value().shape_string() + " + " +
                     bias.value().shape_string());
  }
  Tensor out = x.value();
  const Tensor& b = bias.value();
  const std::size_t r = out.rows(), c = out.cols();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out(i, j) += b[j];
  const std::size_t xi = x.id(), bi = bias.id();
  return x.tape()->record("add_bias", std::move(out), {x, bias}, [xi, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.node_grad(self);
    accumulate(t, xi, g);
    if (t.node_requires_grad(bi)) {
      Tensor& slot = t.grad_slot(bi);
      const std::size_t rows = g.rows(), cols = g.cols();
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) slot[j] += g(i, j);
    }
  });
}

Var scale_rows(const Var& x, const Var& s) {
  require_same_tape(x, s, "scale_rows");
  require_rank2(x, "scale_rows");
  require_rank2(s, "scale_rows");
  if (s.cols() != 1 || s.rows() != x.rows()) {
    throw ShapeError("scale_rows: shape mismatch " + x.value().shape_string() + " vs " +
                     s.value().shape_string());
  }
  Tensor out = x.value();
  const Tensor& sv = s.value();
  const std::size_t r = out.rows(), c = out.cols();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out(i, j) *= sv[i];
  const std::size_t xi = x.id(), si = s.id();
  return x.tape()->record("scale_rows", std::move(out), {x, s}, [xi, si](Tape& t, std::size_t self) {
    const Tensor& g = t.node_grad(self);
    const std::size_t rows = g.rows(), cols = g.cols();
    if (t.node_requires_grad(xi)) {
      const Tensor& sval = t.node_value(si);
      Tensor& slot = t.grad_slot(xi);
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) slot(i, j) += g(i, j) * sval[i];
    }
    if (t.node_requires_grad(si)) {
      const Tensor& xval = t.node_value(xi);
      Tensor& slot = t.grad_slot(si);
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) slot[i] += g(i, j) * xval(i, j);
    }
  });
}

// ---------------------------------------------------------------------------
// Structural

Var concat(const std::vector<Var>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  if (axis > 1) throw ShapeError("concat: axis must be 0 or 1");
  Tape* tape = parts.front().tape();
  std::size_t rows = 0, cols = 0;
  for (const Var& p : parts) {
    require_same_tape(parts.front(), p, "concat");
    require_rank2(p, "concat");
    const std::size_t other = axis == 0 ? p.cols() : p.rows();
    const std::size_t ref = axis == 0 ? parts.front().cols() : parts.front().rows();
    if (other != ref) {
      throw ShapeError("concat: shape mismatch " + parts.front().value().shape_string() + " vs " +
                       p.value().shape_string() + " along axis " + std::to_string(axis));
    }
    if (axis == 0) {
      rows += p.rows();
      cols = p.cols();
    } else {
      cols += p.cols();
      rows = p.rows();
    }
  }
  Tensor out = Tensor::zeros(rows, cols);
  std::vector<std::size_t> ids;
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    const std::size_t vr = v.rows(), vc = v.cols();
    for (std::size_t i = 0; i < vr; ++i) {
      const double* src = v.data() + i * vc;
      double* dst = axis == 0 ? &out(off + i, 0) : &out(i, off);
      std::copy(src, src + vc, dst);
    }
    ids.push_back(p.id());
    offsets.push_back(off);
    off += axis == 0 ? v.rows() : v.cols();
  }
  return tape->record("concat", std::move(out), parts,
                      [ids, offsets, axis](Tape& t, std::size_t self) {
    const Tensor& g = t.node_grad(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!t.node_requires_grad(ids[k])) continue;
      Tensor& slot = t.grad_slot(ids[k]);
      const std::size_t r = slot.rows(), c = slot.cols(), o = offsets[k];
      for (std::size_t i = 0; i < r; ++i) {
        const double* src = axis == 0 ? &g(o + i, 0) : &g(i, o);
        double* dst = &slot(i, 0);
        for (std::size_t j = 0; j < c; ++j) dst[j] += src[j];
      }
    }
  });
}

Var slice(const Var& x, std::size_t axis, std::size_t begin, std::size_t end) {
  require_rank2(x, "slice");
  if (axis > 1) throw ShapeError("slice: axis must be 0 or 1");
  const std::size_t extent = axis == 0 ? x.rows() : x.cols();
  if (begin >= end || end > extent) {
    throw ShapeError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of bounds for " + x.value().shape_string() + " along axis " +
                     std::to_string(axis));
  }
  const Tensor& v = x.value();
  const std::size_t rows = axis == 0 ? end - begin : v.rows();
  const std::size_t cols = axis == 1 ? end - begin : v.cols();
  Tensor out = Tensor::zeros(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* src = axis == 0 ? &v(begin + i, 0) : &v(i, begin);
    std::copy(src, src + cols, &out(i, 0));
  }
  const std::size_t xi = x.id();
  return x.tape()->record("slice", std::move(out), {x}, [xi, axis, begin](Tape& t, std::size_t self) {
    if (!t.node_requires_grad(xi)) return;
    const Tensor& g = t.node_grad(self);
    Tensor& slot = t.grad_slot(xi);
    const std::size_t gr = g.rows(), gc = g.cols();
    for (std::size_t i = 0; i < gr; ++i) {
      const double* src = g.data() + i * gc;
      double* dst = axis == 0 ? &slot(begin + i, 0) : &slot(i, begin);
      for (std::size_t j = 0; j < gc; ++j) dst[j] += src[j];
    }
  });
}

// ---------------------------------------------------------------------------
// Nonlinearities

double gelu_value(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_derivative(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

Var tanh(const Var& x) {
  return unary("tanh", x, [](double v) { return std::tanh(v); },
               [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(const Var& x) {
  return unary("sigmoid", x,
               [](double v) {
                 if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
                 const double e = std::exp(v);
                 return e / (1.0 + e);
               },
               [](double, double y) { return y * (1.0 - y); });
}

Var gelu(const Var& x) {
  return unary("gelu", x, gelu_value, [](double v, double) { return gelu_derivative(v); });
}

Var sqrt(const Var& x) {
  for (std::size_t i = 0; i < x.value().size(); ++i) {
    if (x.value()[i] < 0.0) throw NumericError("sqrt of a negative value");
  }
  return unary("sqrt", x, [](double v) { return std::sqrt(v); },
               [](double, double y) { return 0.5 / y; });
}

Var softmax(const Var& x, std::size_t axis) {
  require_rank2(x, "softmax");
  if (axis > 1) throw ShapeError("softmax: axis must be 0 or 1");
  const Tensor& v = x.value();
  Tensor out(v.shape());
  const std::size_t rows = v.rows(), cols = v.cols();
  const std::size_t outer = axis == 1 ? rows : cols;
  const std::size_t inner = axis == 1 ? cols : rows;
  // Flat index of the k-th entry of slice o along the softmax axis.
  const auto at = [axis, cols](std::size_t o, std::size_t k) {
    return axis == 1 ? o * cols + k : k * cols + o;
  };
  for (std::size_t o = 0; o < outer; ++o) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < inner; ++k) mx = std::max(mx, v[at(o, k)]);
    double total = 0.0;
    for (std::size_t k = 0; k < inner; ++k) {
      out[at(o, k)] = std::exp(v[at(o, k)] - mx);
      total += out[at(o, k)];
    }
    for (std::size_t k = 0; k < inner; ++k) out[at(o, k)] /= total;
  }
  const std::size_t xi = x.id();
  return x.tape()->record("softmax", std::move(out), {x},
                          [xi, outer, inner, at](Tape& t, std::size_t self) {
    if (!t.node_requires_grad(xi)) return;
    const Tensor& g = t.node_grad(self);
    const Tensor& y = t.node_value(self);
    Tensor& slot = t.grad_slot(xi);
    for (std::size_t o = 0; o < outer; ++o) {
      double dot = 0.0;
      for (std::size_t k = 0; k < inner; ++k) dot += g[at(o, k)] * y[at(o, k)];
      for (std::size_t k = 0; k < inner; ++k) slot[at(o, k)] += y[at(o, k)] * (g[at(o, k)] - dot);
    }
  });
}

// ---------------------------------------------------------------------------
// Reductions

Var sum(const Var& x) {
  double total = 0.0;
  for (double v : x.value().values()) total += v;
  const std::size_t xi = x.id();
  return x.tape()->record("sum", Tensor::filled(1, 1, total), {x}, [xi](Tape& t, std::size_t self) {
    if (!t.node_requires_grad(xi)) return;
    const double g = t.node_grad(self)[0];
    Tensor& slot = t.grad_slot(xi);
    for (std::size_t i = 0; i < slot.size(); ++i) slot[i] += g;
  });
}

Var row_sum(const Var& x) {
  require_rank2(x, "row_sum");
  const Tensor& v = x.value();
  Tensor out = Tensor::zeros(v.rows(), 1);
  const std::size_t vr = v.rows(), vc = v.cols();
  for (std::size_t i = 0; i < vr; ++i)
    for (std::size_t j = 0; j < vc; ++j) out[i] += v(i, j);
  const std::size_t xi = x.id();
  return x.tape()->record("row_sum", std::move(out), {x}, [xi](Tape& t, std::size_t self) {
    if (!t.node_requires_grad(xi)) return;
    const Tensor& g = t.node_grad(self);
    Tensor& slot = t.grad_slot(xi);
    const std::size_t sr = slot.rows(), sc = slot.cols();
    for (std::size_t i = 0; i < sr; ++i)
      for (std::size_t j = 0; j < sc; ++j) slot(i, j) += g[i];
  });
}

Var weighted_sq_norm(const Var& x, double w) {
  double total = 0.0;
  for (double v : x.value().values()) total += v * v;
  const std::size_t xi = x.id();
  return x.tape()->record("weighted_sq_norm", Tensor::filled(1, 1, w * total), {x},
                          [xi, w](Tape& t, std::size_t self) {
    if (!t.node_requires_grad(xi)) return;
    const double g = t.node_grad(self)[0];
    const Tensor& xv = t.node_value(xi);
    Tensor& slot = t.grad_slot(xi);
    for (std::size_t i = 0; i < slot.size(); ++i) slot[i] += 2.0 * w * g * xv[i];
  });
}

// ---------------------------------------------------------------------------
// Fused recurrent kernels

namespace {

using RowArr = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Vectorized logistic; exp overflow saturates to 0 or 1 without NaN.
RowArr logistic_array(const RowArr& x) { return 1.0 / (1.0 + (-x).exp()); }
RowArr tanh_array(const RowArr& x) { return 2.0 / (1.0 + (-2.0 * x).exp()) - 1.0; }

}  // namespace

Var lstm_pointwise(const Var& z, const Var& c) {
  require_same_tape(z, c, "lstm_pointwise");
  require_rank2(z, "lstm_pointwise");
  require_rank2(c, "lstm_pointwise");
  const std::size_t b = c.rows(), h = c.cols();
  if (z.rows() != b || z.cols() != 4 * h) {
    throw ShapeError("lstm_pointwise: gate block " + z.value().shape_string() +
                     " does not match cell " + c.value().shape_string());
  }
  const auto zb = as_matrix(z.value()).array();
  const auto cb = as_matrix(c.value()).array();
  const Eigen::Index n = static_cast<Eigen::Index>(h);
  // Gate activations, kept for the backward pass.
  auto gates = std::make_shared<RowArr>(static_cast<Eigen::Index>(b), 5 * n);
  RowArr& gt = *gates;
  gt.leftCols(n) = logistic_array(zb.leftCols(n));
  gt.middleCols(n, n) = logistic_array(zb.middleCols(n, n));
  gt.middleCols(2 * n, n) = tanh_array(zb.middleCols(2 * n, n));
  gt.middleCols(3 * n, n) = logistic_array(zb.rightCols(n));
  const RowArr cn = gt.middleCols(n, n) * cb + gt.leftCols(n) * gt.middleCols(2 * n, n);
  gt.rightCols(n) = tanh_array(cn);

  Tensor out = Tensor::zeros(b, 2 * h);
  auto ob = as_matrix(out).array();
  ob.leftCols(n) = gt.middleCols(3 * n, n) * gt.rightCols(n);
  ob.rightCols(n) = cn;

  const std::size_t zi = z.id(), ci = c.id();
  return z.tape()->record("lstm_pointwise", std::move(out), {z, c},
                          [zi, ci, n, gates](Tape& t, std::size_t self) {
    const RowArr& gt = *gates;
    const auto g = as_matrix(t.node_grad(self)).array();
    const auto ig = gt.leftCols(n), fg = gt.middleCols(n, n), gg = gt.middleCols(2 * n, n);
    const auto og = gt.middleCols(3 * n, n), tc = gt.rightCols(n);
    const auto gh = g.leftCols(n);
    const RowArr dcn = g.rightCols(n) + gh * og * (1.0 - tc.square());
    if (t.node_requires_grad(zi)) {
      const auto cval = as_matrix(t.node_value(ci)).array();
      auto dz = as_matrix(t.grad_slot(zi)).array();
      dz.leftCols(n) += dcn * gg * ig * (1.0 - ig);
      dz.middleCols(n, n) += dcn * cval * fg * (1.0 - fg);
      dz.middleCols(2 * n, n) += dcn * ig * (1.0 - gg.square());
      dz.rightCols(n) += gh * tc * og * (1.0 - og);
    }
    if (t.node_requires_grad(ci)) as_matrix(t.grad_slot(ci)).array() += dcn * fg;
  });
}

Var additive_scores(const Var& keys, const Var& query, const Var& v) {
  require_same_tape(keys, query, "additive_scores");
  require_same_tape(keys, v, "additive_scores");
  require_rank2(keys, "additive_scores");
  require_rank2(query, "additive_scores");
  require_rank2(v, "additive_scores");
  const std::size_t b = query.rows(), a = query.cols();
  if (keys.cols() != a || b == 0 || keys.rows() % b != 0 || v.rows() != a || v.cols() != 1) {
    throw ShapeError("additive_scores: keys " + keys.value().shape_string() + ", query " +
                     query.value().shape_string() + ", v " + v.value().shape_string());
  }
  const std::size_t m = keys.rows() / b;
  const Eigen::Index bi = static_cast<Eigen::Index>(b);
  const auto kv = as_matrix(keys.value());
  const auto qv = as_matrix(query.value());
  // tanh(keys + query) laid out like keys, kept for the backward pass.
  auto th = std::make_shared<RowMat>(kv.rows(), kv.cols());
  for (std::size_t i = 0; i < m; ++i) {
    const Eigen::Index r0 = static_cast<Eigen::Index>(i) * bi;
    th->middleRows(r0, bi).array() = tanh_array(kv.middleRows(r0, bi).array() + qv.array());
  }
  const Eigen::VectorXd flat = *th * as_matrix(v.value());
  Tensor out = Tensor::zeros(b, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t r = 0; r < b; ++r) out(r, i) = flat[static_cast<Eigen::Index>(i * b + r)];

  const std::size_t ki = keys.id(), qi = query.id(), vi = v.id();
  return keys.tape()->record("additive_scores", std::move(out), {keys, query, v},
                             [ki, qi, vi, b, m, th](Tape& t, std::size_t self) {
    const Tensor& g = t.node_grad(self);
    const Eigen::Index bi = static_cast<Eigen::Index>(b);
    Eigen::VectorXd gflat(static_cast<Eigen::Index>(m * b));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t r = 0; r < b; ++r) gflat[static_cast<Eigen::Index>(i * b + r)] = g(r, i);
    const auto vval = as_matrix(t.node_value(vi));
    if (t.node_requires_grad(vi)) {
      as_matrix(t.grad_slot(vi)).noalias() += th->transpose() * gflat;
    }
    if (!t.node_requires_grad(ki) && !t.node_requires_grad(qi)) return;
    const RowMat dpre =
        ((gflat * vval.transpose()).array() * (1.0 - th->array().square())).matrix();
    if (t.node_requires_grad(ki)) as_matrix(t.grad_slot(ki)) += dpre;
    if (t.node_requires_grad(qi)) {
      auto dq = as_matrix(t.grad_slot(qi));
      for (std::size_t i = 0; i < m; ++i) dq += dpre.middleRows(static_cast<Eigen::Index>(i) * bi, bi);
    }
  });
}

Var weighted_row_sum(const Var& values, const Var& weights) {
  require_same_tape(values, weights, "weighted_row_sum");
  require_rank2(values, "weighted_row_sum");
  require_rank2(weights, "weighted_row_sum");
  const std::size_t b = weights.rows(), m = weights.cols(), hd = values.cols();
  if (values.rows() != m * b) {
    throw ShapeError("weighted_row_sum: values " + values.value().shape_string() +
                     " vs weights " + weights.value().shape_string());
  }
  const Tensor& ev = values.value();
  const Tensor& wv = weights.value();
  Tensor out = Tensor::zeros(b, hd);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t r = 0; r < b; ++r) {
      const double w = wv(r, i);
      for (std::size_t k = 0; k < hd; ++k) out(r, k) += w * ev(i * b + r, k);
    }
  const std::size_t ei = values.id(), wi = weights.id();
  return values.tape()->record("weighted_row_sum", std::move(out), {values, weights},
                               [ei, wi, b, m, hd](Tape& t, std::size_t self) {
    const Tensor& g = t.node_grad(self);
    const Tensor& eval = t.node_value(ei);
    const Tensor& wval = t.node_value(wi);
    Tensor* de = t.node_requires_grad(ei) ? &t.grad_slot(ei) : nullptr;
    Tensor* dw = t.node_requires_grad(wi) ? &t.grad_slot(wi) : nullptr;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t r = 0; r < b; ++r) {
        double dot = 0.0;
        for (std::size_t k = 0; k < hd; ++k) {
          if (de != nullptr) (*de)(i * b + r, k) += wval(r, i) * g(r, k);
          dot += eval(i * b + r, k) * g(r, k);
        }
        if (dw != nullptr) (*dw)(r, i) += dot;
      }
  });
}

}  // namespace slung

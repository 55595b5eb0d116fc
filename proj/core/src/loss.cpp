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

#include "slung/loss.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "slung/errors.hpp"

namespace slung {

namespace {

Var col(const Var& x, std::size_t j) { return slice(x, 1, j, j + 1); }
Var cols(const Var& x, std::size_t a, std::size_t b) { return slice(x, 1, a, b); }

Var cross(const Var& a, const Var& b) {
  const Var ax = col(a, 0), ay = col(a, 1), az = col(a, 2);
  const Var bx = col(b, 0), by = col(b, 1), bz = col(b, 2);
  return concat({sub(mul(ay, bz), mul(az, by)), sub(mul(az, bx), mul(ax, bz)),
                 sub(mul(ax, by), mul(ay, bx))},
                1);
}

Var row_dot(const Var& a, const Var& b) { return row_sum(mul(a, b)); }

Var zero_scalar(Tape& t) { return t.constant(Tensor::zeros(1, 1)); }

void require_batch(const Var& v, std::size_t rows, std::size_t cols_, const char* what) {
  if (v.rows() != rows || v.cols() != cols_) {
    throw ShapeError(std::string(what) + ": got " + v.value().shape_string() + ", expected [" +
                     std::to_string(rows) + ", " + std::to_string(cols_) + "]");
  }
}

}  // namespace

void LossWeights::validate() const {
  for (double l : lambda) {
    if (!(l >= 0.0)) throw std::invalid_argument("loss weights: lambda must be >= 0");
  }
  if (!(phi >= 0.0) || !(psi >= 0.0) || !(rho >= 0.0)) {
    throw std::invalid_argument("loss weights: phi, psi, rho must be >= 0");
  }
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw std::invalid_argument("loss weights: alpha and beta must be > 0");
  }
}

double decay_weight(double rate, std::size_t offset) {
  return std::exp(-rate * static_cast<double>(offset));
}

Var quat_right_multiply(const Var& q, const Tensor& e) {
  const std::size_t b = q.rows();
  if (q.cols() != 4 || e.rows() != b || e.cols() != 4) {
    throw ShapeError("quat_right_multiply: " + q.value().shape_string() + " and " + e.shape_string());
  }
  // Coefficients of (w, x, y, z) in each component of q (x) e.
  static constexpr int kIdx[4][4] = {{0, 1, 2, 3}, {1, 0, 3, 2}, {2, 3, 0, 1}, {3, 2, 1, 0}};
  static constexpr double kSign[4][4] = {
      {1, -1, -1, -1}, {1, 1, 1, -1}, {1, -1, 1, 1}, {1, 1, -1, 1}};
  Tape& tape = *q.tape();
  std::vector<Var> parts;
  for (int out = 0; out < 4; ++out) {
    Tensor coeff = Tensor::zeros(b, 4);
    for (std::size_t r = 0; r < b; ++r)
      for (int k = 0; k < 4; ++k) coeff(r, k) = kSign[out][k] * e(r, kIdx[out][k]);
    parts.push_back(row_sum(mul(q, tape.constant(std::move(coeff)))));
  }
  return concat(parts, 1);
}

BatchedStep dynamics_step(const Var& x, const Var& omega_load, const Tensor& u,
                          const PhysicalParams& prm) {
  const std::size_t b = x.rows();
  require_batch(x, b, kStateDim, "dynamics_step state");
  require_batch(omega_load, b, 3, "dynamics_step omega");
  if (u.rows() != b || u.cols() != kControlDim) {
    throw ShapeError("dynamics_step controls: " + u.shape_string());
  }
  Tape& tape = *x.tape();
  const double h = prm.dt, mq = prm.m_vehicle, ml = prm.m_load, l = prm.cable_length;
  const double g = prm.gravity, mt = mq + ml;

  const Var p = cols(x, 0, 3), v = cols(x, 3, 6), q = cols(x, 6, 10), pl = cols(x, 10, 13);
  const Var qw = col(q, 0), qx = col(q, 1), qy = col(q, 2), qz = col(q, 3);

  const Var xi = scalar_mul(sub(pl, p), 1.0 / l);
  const Var re3 = concat({scalar_mul(add(mul(qx, qz), mul(qw, qy)), 2.0),
                          scalar_mul(sub(mul(qy, qz), mul(qw, qx)), 2.0),
                          sub(add(mul(qw, qw), mul(qz, qz)), add(mul(qx, qx), mul(qy, qy)))},
                         1);
  Tensor thrust = Tensor::zeros(b, 1);
  Tensor q_inc = Tensor::zeros(b, 4);
  for (std::size_t r = 0; r < b; ++r) {
    thrust[r] = u(r, 0);
    const UnitQuat e = quat_exp(h * Vec3(u(r, 1), u(r, 2), u(r, 3)));
    q_inc(r, 0) = e.w;
    q_inc(r, 1) = e.x;
    q_inc(r, 2) = e.y;
    q_inc(r, 3) = e.z;
  }
  const Var force = scale_rows(re3, tape.constant(std::move(thrust)));  // T R e3

  const Var tension = add(scalar_mul(row_dot(xi, force), -ml / mt),
                          scalar_mul(row_dot(omega_load, omega_load), ml * mq * l / mt));
  const Var u_load =
      add_bias(scale_rows(xi, scalar_mul(tension, -1.0 / ml)), tape.constant(Tensor::row({0, 0, -g})));
  const Var u_quad =
      add_bias(scalar_mul(force, 1.0 / mq), tape.constant(Tensor::row({0, 0, -(mt / mq) * g})));
  const Var v_load = add(v, scalar_mul(cross(omega_load, xi), l));
  const Var accel = add(u_quad, u_load);

  const Var p_next = add(add(p, scalar_mul(v, h)), scalar_mul(accel, 0.5 * h * h));
  const Var v_next = add(v, scalar_mul(accel, h));
  const Var pl_next = add(add(pl, scalar_mul(v_load, h)), scalar_mul(u_load, 0.5 * h * h));
  const Var q_next = quat_right_multiply(q, q_inc);

  BatchedStep out;
  out.state = concat({p_next, v_next, q_next, pl_next}, 1);
  out.omega_load = sub(scalar_mul(omega_load, 1.0 - prm.damping),
                       scalar_mul(cross(xi, force), h / (mq * l)));
  return out;
}

Var fit_loss(const std::vector<Var>& states, const std::vector<Tensor>& truth,
             const LossWeights& w) {
  if (states.empty() || states.size() > truth.size()) {
    throw ShapeError("fit_loss: " + std::to_string(states.size()) + " predictions vs " +
                     std::to_string(truth.size()) + " targets");
  }
  Tape& tape = *states.front().tape();
  const std::size_t b = states.front().rows();
  Var acc = zero_scalar(tape);
  for (std::size_t n = 0; n < states.size(); ++n) {
    require_batch(states[n], b, kStateDim, "fit_loss prediction");
    const Tensor& y = truth[n];
    if (y.rows() != b || y.cols() != kStateDim) {
      throw ShapeError("fit_loss target: " + y.shape_string());
    }
    const double decay = decay_weight(w.alpha, n) / static_cast<double>(b);
    const Var diff = sub(states[n], tape.constant(y));
    Tensor inv = Tensor::zeros(b, 4);
    for (std::size_t r = 0; r < b; ++r) {
      const UnitQuat qi = quat_inv(UnitQuat{y(r, 6), y(r, 7), y(r, 8), y(r, 9)});
      inv(r, 0) = qi.w;
      inv(r, 1) = qi.x;
      inv(r, 2) = qi.y;
      inv(r, 3) = qi.z;
    }
    const Var qerr = add_bias(quat_right_multiply(cols(states[n], 6, 10), inv),
                              tape.constant(Tensor::row({-1, 0, 0, 0})));
    acc = add(acc, weighted_sq_norm(cols(diff, 0, 3), decay * w.lambda[0]));
    acc = add(acc, weighted_sq_norm(cols(diff, 3, 6), decay * w.lambda[1]));
    acc = add(acc, weighted_sq_norm(qerr, decay * w.lambda[2]));
    acc = add(acc, weighted_sq_norm(cols(diff, 10, 13), decay * w.lambda[3]));
  }
  return acc;
}

Var physics_loss(const std::vector<Var>& states, const std::vector<Var>& slacks,
                 const WindowBatch& batch, const PhysicalParams& params, const LossWeights& w) {
  if (states.empty() || slacks.size() != states.size() ||
      batch.step_controls.size() < states.size()) {
    throw ShapeError("physics_loss: " + std::to_string(states.size()) + " predictions, " +
                     std::to_string(slacks.size()) + " slacks, " +
                     std::to_string(batch.step_controls.size()) + " controls");
  }
  Tape& tape = *states.front().tape();
  if (w.phi == 0.0) return zero_scalar(tape);
  const std::size_t b = states.front().rows();
  Var x = tape.constant(batch.history_states.back());
  Var omega = tape.constant(batch.omega_load);
  Var acc = zero_scalar(tape);
  for (std::size_t n = 0; n < states.size(); ++n) {
    const Tensor& xv = x.value();
    for (std::size_t r = 0; r < b; ++r) {
      const double dx = xv(r, 10) - xv(r, 0), dy = xv(r, 11) - xv(r, 1), dz = xv(r, 12) - xv(r, 2);
      if (std::sqrt(dx * dx + dy * dy + dz * dz) < 1e-6) {
        throw DegenerateStateError("physics loss: cable direction undefined",
                                   static_cast<long>(n));
      }
    }
    const BatchedStep f = dynamics_step(x, omega, batch.step_controls[n], params);
    const Var residual = add(sub(states[n], f.state), slacks[n]);
    acc = add(acc, weighted_sq_norm(residual, w.phi * decay_weight(w.beta, n) / static_cast<double>(b)));
    x = states[n];
    omega = f.omega_load;
  }
  return acc;
}

Var projection_loss(const std::vector<Var>& states, const LossWeights& w) {
  if (states.empty()) throw ShapeError("projection_loss: no predictions");
  Tape& tape = *states.front().tape();
  if (w.psi == 0.0) return zero_scalar(tape);
  const std::size_t b = states.front().rows();
  Var acc = zero_scalar(tape);
  for (const Var& s : states) {
    const Var q = cols(s, 6, 10);
    const Var gap = add_scalar(neg(sqrt(row_dot(q, q))), 1.0);
    acc = add(acc, weighted_sq_norm(gap, w.psi / static_cast<double>(b)));
  }
  return acc;
}

Var slack_loss(const std::vector<Var>& slacks, const LossWeights& w) {
  if (slacks.empty()) throw ShapeError("slack_loss: no slacks");
  Tape& tape = *slacks.front().tape();
  if (w.rho == 0.0) return zero_scalar(tape);
  const std::size_t b = slacks.front().rows();
  Var acc = zero_scalar(tape);
  for (std::size_t n = 0; n < slacks.size(); ++n) {
    acc = add(acc, weighted_sq_norm(slacks[n], w.rho * decay_weight(w.beta, n) / static_cast<double>(b)));
  }
  return acc;
}

LossTerms::Values LossTerms::values() const {
  return {fit.value()[0], physics.value()[0], projection.value()[0], slack.value()[0],
          total.value()[0]};
}

LossTerms total_loss(const Seq2SeqModel::Forward& forward, const WindowBatch& batch,
                     const PhysicalParams& params, const LossWeights& w) {
  LossTerms t;
  t.fit = fit_loss(forward.states, batch.future_states, w);
  t.physics = physics_loss(forward.states, forward.slacks, batch, params, w);
  t.projection = projection_loss(forward.states, w);
  t.slack = slack_loss(forward.slacks, w);
  t.total = add(add(t.fit, t.physics), add(t.projection, t.slack));
  return t;
}

}  // namespace slung

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

// Physics-informed training objective
//
//   L = L_fit + L_physics + L_projection + L_slack
//
// evaluated on a batch of windows. Every term is summed over prediction
// steps and averaged over the batch. Step offsets n - M start at 0 for the
// first predicted state.

#ifndef SLUNG_LOSS_HPP_
#define SLUNG_LOSS_HPP_

#include <array>
#include <cstddef>
#include <vector>

#include "slung/autodiff.hpp"
#include "slung/dynamics.hpp"
#include "slung/seq2seq.hpp"

namespace slung {

struct LossWeights {
  std::array<double, 4> lambda{20.0, 20.0, 20.0, 20.0};  // p, v, q, p_L
  double phi = 5.0;
  double psi = 10.0;
  double rho = 0.1;
  double alpha = 0.1;
  double beta = 0.6;

  // Throws std::invalid_argument on negative weights or non-positive rates.
  void validate() const;
};

// exp(-rate * offset).
double decay_weight(double rate, std::size_t offset);

// Row-wise Hamilton product q (x) e for a differentiable q [B, 4] and a
// constant e [B, 4].
Var quat_right_multiply(const Var& q, const Tensor& e);

// The discrete model as a differentiable map on a batch. x is [B, 13],
// omega_load [B, 3], u the constant [B, 4] controls. The thrust axis is taken
// from the homogeneous quaternion form (2(xz+wy), 2(yz-wx), w^2-x^2-y^2+z^2),
// which equals R e3 on unit quaternions without normalizing inside the graph;
// the attitude advances as q (x) exp(h omega / 2).
struct BatchedStep {
  Var state;
  Var omega_load;
};
BatchedStep dynamics_step(const Var& x, const Var& omega_load, const Tensor& u,
                          const PhysicalParams& params);

Var fit_loss(const std::vector<Var>& states, const std::vector<Tensor>& truth,
             const LossWeights& w);
// Degenerate cable configurations raise DegenerateStateError with the step offset.
Var physics_loss(const std::vector<Var>& states, const std::vector<Var>& slacks,
                 const WindowBatch& batch, const PhysicalParams& params, const LossWeights& w);
Var projection_loss(const std::vector<Var>& states, const LossWeights& w);
Var slack_loss(const std::vector<Var>& slacks, const LossWeights& w);

struct LossTerms {
  Var fit, physics, projection, slack, total;

  struct Values {
    double fit = 0, physics = 0, projection = 0, slack = 0, total = 0;
  };
  Values values() const;
};

LossTerms total_loss(const Seq2SeqModel::Forward& forward, const WindowBatch& batch,
                     const PhysicalParams& params, const LossWeights& w);

}  // namespace slung

#endif  // SLUNG_LOSS_HPP_

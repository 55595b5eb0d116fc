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

// Discrete quadrotor + cable-slung load model.
//
// Axis convention ("audited"): the world frame is z-up, e3 = (0, 0, 1), and the
// thrust acts along +R e3. Gravity therefore enters the load virtual input as
// -g e3:
//
//   xi    = (p_L - p) / l
//   T_L   = -(m_L / (m_L + m_Q)) xi^T R T_Q e3 + (m_L m_Q / (m_L + m_Q)) l |Omega_L|^2
//   u*    = -(T_L / m_L) xi - g e3
//   u_bar = (T_Q / m_Q) R e3 - ((m_Q + m_L) / m_Q) g e3
//
// With this assignment the hover configuration (R = I, xi = -e3, Omega_L = 0,
// T_Q = (m_Q + m_L) g) gives T_L = m_L g, u* = 0 and u_bar = 0, and the swing
// mode of the Omega_L update is an oscillator with the pendulum frequency
// sqrt(T_Q / (m_Q l)). The hover fixed-point tests lock this choice.
//
// The load velocity is not part of the observed state; it is reconstructed
// from the taut-cable kinematics v_L = v + l Omega_L x xi.

#ifndef SLUNG_DYNAMICS_HPP_
#define SLUNG_DYNAMICS_HPP_

#include <Eigen/Dense>
#include <span>
#include <utility>
#include <vector>

#include "slung/so3.hpp"

namespace slung {

inline constexpr int kStateDim = 13;
inline constexpr int kControlDim = 4;

using StateVector = Eigen::Matrix<double, kStateDim, 1>;
using ControlVector = Eigen::Matrix<double, kControlDim, 1>;

// Offsets of the groups inside a 13-vector (p, v, q, p_L).
struct StateLayout {
  static constexpr int kPosition = 0;
  static constexpr int kVelocity = 3;
  static constexpr int kQuat = 6;
  static constexpr int kLoadPosition = 10;
};

struct SystemState {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  UnitQuat q;
  Vec3 p_load = Vec3::Zero();

  StateVector to_vector() const;
  static SystemState from_vector(const StateVector& x);
};

struct ControlInput {
  double thrust = 0.0;  // N, >= 0
  Vec3 omega = Vec3::Zero();  // body rates, rad/s

  ControlVector to_vector() const;
  static ControlInput from_vector(const ControlVector& u);
};

enum class AxisConvention { kPaperAudited };

struct PhysicalParams {
  double m_vehicle = 1.4;    // kg
  double m_load = 0.1;       // kg
  double cable_length = 0.6; // m
  double damping = 0.02;     // per step, in [0, 1]
  double gravity = 9.8;      // m/s^2
  double dt = 0.03;          // s
  double taut_tolerance = 0.05;  // fraction of cable_length
  AxisConvention convention = AxisConvention::kPaperAudited;

  // Throws std::invalid_argument on non-positive masses/length/dt or d outside [0, 1].
  void validate() const;
  double total_mass() const { return m_vehicle + m_load; }
};

Vec3 world_up();

// (p_L - p) / l. Throws DegenerateStateError if |p_L - p| < 1e-6 m.
Vec3 cable_direction(const SystemState& x, const PhysicalParams& params);

double cable_tension(const SystemState& x, const Vec3& omega_load, const ControlInput& u,
                     const PhysicalParams& params);

Vec3 load_virtual_input(const SystemState& x, const Vec3& omega_load, const ControlInput& u,
                        const PhysicalParams& params);

Vec3 quad_virtual_input(const SystemState& x, const ControlInput& u, const PhysicalParams& params);

// v + l * Omega_L x xi.
Vec3 load_velocity(const SystemState& x, const Vec3& omega_load, const PhysicalParams& params);

// True when | |p_L - p| - l | <= taut_tolerance * l.
bool is_taut(const SystemState& x, const PhysicalParams& params);

struct StepResult {
  SystemState state;
  Vec3 omega_load = Vec3::Zero();
};

// One transition of the discrete model. All auxiliaries (xi, T_L, u*, u_bar)
// come from the current step. The orientation is propagated on SO(3) and
// returned as a unit quaternion on the same hemisphere as x.q.
StepResult step(const SystemState& x, const Vec3& omega_load, const ControlInput& u,
                const PhysicalParams& params);

struct RolloutResult {
  std::vector<SystemState> states;
  std::vector<Vec3> omega_loads;       // Omega_L after each step
  std::vector<std::size_t> taut_violations;  // step indices whose output is not taut
};

// Open-loop iteration of step; states[i] is the state after controls[i].
// Step errors are rethrown with the failing step index.
RolloutResult rollout(const SystemState& x0, const Vec3& omega_load0,
                      std::span<const ControlInput> controls, const PhysicalParams& params);

// Omega_L ~= xi_k x (xi_{k+1} - xi_k) / dt; the axial component is unobservable
// and is set to zero.
Vec3 estimate_load_angular_velocity(const SystemState& x_k, const SystemState& x_next,
                                    const PhysicalParams& params);

// Hover equilibrium at position p: level attitude, load hanging l below the
// vehicle, zero velocity, thrust (m_Q + m_L) g, zero rates.
std::pair<SystemState, ControlInput> hover_equilibrium(const Vec3& p, const PhysicalParams& params);

}  // namespace slung

#endif  // SLUNG_DYNAMICS_HPP_

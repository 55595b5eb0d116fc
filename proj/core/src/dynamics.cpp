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

#include "slung/dynamics.hpp"

#include <cmath>
#include <stdexcept>

#include "slung/errors.hpp"

namespace slung {

StateVector SystemState::to_vector() const {
  StateVector x;
  x.segment<3>(StateLayout::kPosition) = p;
  x.segment<3>(StateLayout::kVelocity) = v;
  x.segment<4>(StateLayout::kQuat) = q.as_vec();
  x.segment<3>(StateLayout::kLoadPosition) = p_load;
  return x;
}

SystemState SystemState::from_vector(const StateVector& x) {
  SystemState s;
  s.p = x.segment<3>(StateLayout::kPosition);
  s.v = x.segment<3>(StateLayout::kVelocity);
  s.q = UnitQuat::from_vec(x.segment<4>(StateLayout::kQuat));
  s.p_load = x.segment<3>(StateLayout::kLoadPosition);
  return s;
}

ControlVector ControlInput::to_vector() const {
  ControlVector u;
  u << thrust, omega.x(), omega.y(), omega.z();
  return u;
}

ControlInput ControlInput::from_vector(const ControlVector& u) {
  return {u[0], Vec3(u[1], u[2], u[3])};
}

void PhysicalParams::validate() const {
  if (!(m_vehicle > 0.0) || !(m_load > 0.0) || !(cable_length > 0.0) || !(dt > 0.0)) {
    throw std::invalid_argument("physical params: masses, cable length and dt must be positive");
  }
  if (!(damping >= 0.0 && damping <= 1.0)) {
    throw std::invalid_argument("physical params: damping must lie in [0, 1]");
  }
  if (!(taut_tolerance >= 0.0)) {
    throw std::invalid_argument("physical params: taut tolerance must be nonnegative");
  }
}

Vec3 world_up() { return Vec3::UnitZ(); }

Vec3 cable_direction(const SystemState& x, const PhysicalParams& params) {
  const Vec3 d = x.p_load - x.p;
  if (d.norm() < 1e-6) {
    throw DegenerateStateError("cable direction undefined: load and vehicle coincide");
  }
  return d / params.cable_length;
}

namespace {

// Thrust direction R e3 from a (normalized) attitude.
Vec3 thrust_axis(const UnitQuat& q) { return quat_to_rot(q.normalized()).col(2); }

double tension_from(const Vec3& xi, const Vec3& thrust_dir, const Vec3& omega_load,
                    const ControlInput& u, const PhysicalParams& prm) {
  const double mq = prm.m_vehicle, ml = prm.m_load;
  return -(ml / (ml + mq)) * xi.dot(thrust_dir) * u.thrust +
         (ml * mq / (ml + mq)) * prm.cable_length * omega_load.squaredNorm();
}

}  // namespace

double cable_tension(const SystemState& x, const Vec3& omega_load, const ControlInput& u,
                     const PhysicalParams& params) {
  return tension_from(cable_direction(x, params), thrust_axis(x.q), omega_load, u, params);
}

Vec3 load_virtual_input(const SystemState& x, const Vec3& omega_load, const ControlInput& u,
                        const PhysicalParams& params) {
  const Vec3 xi = cable_direction(x, params);
  const double tension = tension_from(xi, thrust_axis(x.q), omega_load, u, params);
  return -(tension / params.m_load) * xi - params.gravity * world_up();
}

Vec3 quad_virtual_input(const SystemState& x, const ControlInput& u, const PhysicalParams& params) {
  const double mq = params.m_vehicle;
  return (u.thrust / mq) * thrust_axis(x.q) -
         (params.total_mass() / mq) * params.gravity * world_up();
}

Vec3 load_velocity(const SystemState& x, const Vec3& omega_load, const PhysicalParams& params) {
  return x.v + params.cable_length * omega_load.cross(cable_direction(x, params));
}

bool is_taut(const SystemState& x, const PhysicalParams& params) {
  const double len = (x.p_load - x.p).norm();
  return std::abs(len - params.cable_length) <= params.taut_tolerance * params.cable_length;
}

StepResult step(const SystemState& x, const Vec3& omega_load, const ControlInput& u,
                const PhysicalParams& params) {
  const double h = params.dt;
  const UnitQuat q = x.q.normalized();
  const Mat3 r = quat_to_rot(q);
  const Vec3 re3 = r.col(2);
  const Vec3 xi = cable_direction(x, params);

  const double tension = tension_from(xi, re3, omega_load, u, params);
  const Vec3 u_load = -(tension / params.m_load) * xi - params.gravity * world_up();
  const Vec3 u_quad = (u.thrust / params.m_vehicle) * re3 -
                      (params.total_mass() / params.m_vehicle) * params.gravity * world_up();
  const Vec3 v_load = x.v + params.cable_length * omega_load.cross(xi);
  const Vec3 accel = u_quad + u_load;

  StepResult out;
  out.state.p = x.p + h * x.v + 0.5 * h * h * accel;
  out.state.v = x.v + h * accel;
  out.state.p_load = x.p_load + h * v_load + 0.5 * h * h * u_load;

  UnitQuat q_next = rot_to_quat(r * so3_exp(h * u.omega));
  if (q_next.dot(x.q) < 0.0) {
    q_next = -q_next;
  }
  out.state.q = q_next;

  out.omega_load = (1.0 - params.damping) * omega_load -
                   (h / (params.m_vehicle * params.cable_length)) * hat(xi) * (u.thrust * re3);
  return out;
}

RolloutResult rollout(const SystemState& x0, const Vec3& omega_load0,
                      std::span<const ControlInput> controls, const PhysicalParams& params) {
  if (controls.empty()) {
    throw std::invalid_argument("rollout: empty control sequence");
  }
  RolloutResult result;
  result.states.reserve(controls.size());
  result.omega_loads.reserve(controls.size());
  SystemState x = x0;
  Vec3 omega = omega_load0;
  for (std::size_t k = 0; k < controls.size(); ++k) {
    StepResult next;
    try {
      next = step(x, omega, controls[k], params);
    } catch (const DegenerateStateError& e) {
      throw DegenerateStateError(e.what(), static_cast<long>(k));
    }
    x = next.state;
    omega = next.omega_load;
    if (!is_taut(x, params)) {
      result.taut_violations.push_back(k);
    }
    result.states.push_back(x);
    result.omega_loads.push_back(omega);
  }
  return result;
}

Vec3 estimate_load_angular_velocity(const SystemState& x_k, const SystemState& x_next,
                                    const PhysicalParams& params) {
  const Vec3 xi = cable_direction(x_k, params);
  const Vec3 xi_next = cable_direction(x_next, params);
  return xi.cross((xi_next - xi) / params.dt);
}

std::pair<SystemState, ControlInput> hover_equilibrium(const Vec3& p, const PhysicalParams& params) {
  SystemState x;
  x.p = p;
  x.v = Vec3::Zero();
  x.q = UnitQuat::identity();
  x.p_load = p - params.cable_length * world_up();
  ControlInput u;
  u.thrust = params.total_mass() * params.gravity;
  u.omega = Vec3::Zero();
  return {x, u};
}

}  // namespace slung

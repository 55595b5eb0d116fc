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

#include <gtest/gtest.h>

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "slung/errors.hpp"

namespace slung {
namespace {

constexpr double kPi = std::numbers::pi;

PhysicalParams params_with_vehicle_mass(double mq) {
  PhysicalParams p;
  p.m_vehicle = mq;
  return p;
}

class VehicleMass : public ::testing::TestWithParam<double> {};

TEST(CableDirection, Examples) {
  PhysicalParams prm;
  SystemState x;
  x.p_load = Vec3(0, 0, prm.cable_length);
  EXPECT_LT((cable_direction(x, prm) - Vec3::UnitZ()).norm(), 1e-15);

  x.p = Vec3(1, 1, 1);
  x.p_load = Vec3(1, 1, 1.6);
  EXPECT_LT((cable_direction(x, prm) - Vec3::UnitZ()).norm(), 1e-14);

  x.p_load = x.p + Vec3(1e-9, 0, 0);
  EXPECT_THROW(cable_direction(x, prm), DegenerateStateError);
}

TEST_P(VehicleMass, HoverTensionEqualsLoadWeight) {
  const PhysicalParams prm = params_with_vehicle_mass(GetParam());
  const auto [x, u] = hover_equilibrium(Vec3(0.3, -1, 2), prm);
  EXPECT_NEAR(cable_tension(x, Vec3::Zero(), u, prm), prm.m_load * prm.gravity, 1e-12);
  EXPECT_LT(load_virtual_input(x, Vec3::Zero(), u, prm).norm(), 1e-12);
  EXPECT_LT((quad_virtual_input(x, u, prm) + load_virtual_input(x, Vec3::Zero(), u, prm)).norm(),
            1e-12);
}

TEST(Tension, ZeroAndCentripetal) {
  PhysicalParams prm;
  auto [x, u] = hover_equilibrium(Vec3::Zero(), prm);
  u.thrust = 0.0;
  EXPECT_EQ(cable_tension(x, Vec3::Zero(), u, prm), 0.0);
  // (0.1 * 1.4 / 1.5) * 0.6
  EXPECT_NEAR(cable_tension(x, Vec3(0, 1, 0), u, prm), 0.056, 1e-15);
}

TEST(LoadVirtualInput, FreeFallAndMassScaling) {
  PhysicalParams prm;
  auto [x, u] = hover_equilibrium(Vec3::Zero(), prm);
  u.thrust = 0.0;
  // Zero tension leaves only gravity, pointing down in the z-up frame.
  EXPECT_LT((load_virtual_input(x, Vec3::Zero(), u, prm) + prm.gravity * Vec3::UnitZ()).norm(),
            1e-15);

  // Fixed tension: doubling m_L halves the tension term, gravity unchanged.
  u.thrust = 5.0;
  const Vec3 xi = cable_direction(x, prm);
  const double t1 = cable_tension(x, Vec3::Zero(), u, prm);
  const Vec3 a1 = load_virtual_input(x, Vec3::Zero(), u, prm) + prm.gravity * Vec3::UnitZ();
  EXPECT_LT((a1 + (t1 / prm.m_load) * xi).norm(), 1e-13);
}

TEST(QuadVirtualInput, Examples) {
  PhysicalParams prm;
  SystemState x;
  x.p_load = Vec3(0, 0, -prm.cable_length);
  ControlInput u;
  const Vec3 expected = -(prm.total_mass() / prm.m_vehicle) * prm.gravity * Vec3::UnitZ();
  EXPECT_LT((quad_virtual_input(x, u, prm) - expected).norm(), 1e-15);

  PhysicalParams loadless = prm;
  loadless.m_load = 0.0;
  u.thrust = loadless.m_vehicle * loadless.gravity;
  EXPECT_LT(quad_virtual_input(x, u, loadless).norm(), 1e-15);
}

TEST_P(VehicleMass, HoverFixedPointStep) {
  const PhysicalParams prm = params_with_vehicle_mass(GetParam());
  const auto [x, u] = hover_equilibrium(Vec3(1, 2, 3), prm);
  const StepResult r = step(x, Vec3::Zero(), u, prm);
  const StateVector diff = r.state.to_vector() - x.to_vector();
  EXPECT_LT(diff.cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT(r.omega_load.norm(), 1e-9);
  EXPECT_LT(std::abs(r.state.q.norm() - 1.0), 1e-12);
}

TEST_P(VehicleMass, HoverRolloutDrift) {
  const PhysicalParams prm = params_with_vehicle_mass(GetParam());
  const auto [x, u] = hover_equilibrium(Vec3(0, 0, 1), prm);
  const std::vector<ControlInput> controls(500, u);
  const RolloutResult r = rollout(x, Vec3::Zero(), controls, prm);
  ASSERT_EQ(r.states.size(), 500u);
  EXPECT_LT((r.states.back().to_vector() - x.to_vector()).norm(), 1e-6);
  EXPECT_TRUE(r.taut_violations.empty());
}

INSTANTIATE_TEST_SUITE_P(Masses, VehicleMass, ::testing::Values(0.5, 1.4, 3.0));

TEST(Step, FullYawTurnAfterHundredSteps) {
  PhysicalParams prm;
  auto [x, u] = hover_equilibrium(Vec3::Zero(), prm);
  u.omega = Vec3(0, 0, 2 * kPi / (100 * prm.dt));
  SystemState s = x;
  Vec3 om = Vec3::Zero();
  for (int k = 0; k < 100; ++k) {
    const StepResult r = step(s, om, u, prm);
    s = r.state;
    om = r.omega_load;
  }
  const double d = std::min((s.q.as_vec() - x.q.as_vec()).norm(), (s.q.as_vec() + x.q.as_vec()).norm());
  EXPECT_LT(d, 1e-6);
}

TEST(Step, LoadAtRestWithZeroThrust) {
  PhysicalParams prm;
  auto [x, u] = hover_equilibrium(Vec3::Zero(), prm);
  u.thrust = 0.0;
  const Vec3 u_star = load_virtual_input(x, Vec3::Zero(), u, prm);
  const StepResult r = step(x, Vec3::Zero(), u, prm);
  // v_L = 0 at rest, so the load moves by h^2/2 u*.
  EXPECT_LT((r.state.p_load - x.p_load - 0.5 * prm.dt * prm.dt * u_star).norm(), 1e-15);
}

// Direct transcription of the update equations with cross products and a
// power-series exponential, independent of the library code paths.
StepResult oracle_step(const SystemState& x, const Vec3& om, const ControlInput& u,
                       const PhysicalParams& prm) {
  const double h = prm.dt, mq = prm.m_vehicle, ml = prm.m_load, l = prm.cable_length;
  const Eigen::Quaterniond qe(x.q.w, x.q.x, x.q.y, x.q.z);
  const Eigen::Matrix3d r = qe.normalized().toRotationMatrix();
  const Vec3 e3 = Vec3::UnitZ();
  const Vec3 xi = (x.p_load - x.p) / l;
  const double tl = -(ml / (ml + mq)) * xi.dot(r * e3) * u.thrust + (ml * mq / (ml + mq)) * l * om.squaredNorm();
  const Vec3 us = -(tl / ml) * xi - prm.gravity * e3;
  const Vec3 ub = (u.thrust / mq) * (r * e3) - ((mq + ml) / mq) * prm.gravity * e3;
  const Vec3 vl = x.v + l * om.cross(xi);
  StepResult out;
  out.state.p = x.p + h * x.v + 0.5 * h * h * (ub + us);
  out.state.v = x.v + h * (ub + us);
  out.state.p_load = x.p_load + h * vl + 0.5 * h * h * us;
  const Eigen::AngleAxisd inc(h * u.omega.norm(), u.omega.normalized());
  Eigen::Quaterniond qn(r * inc.toRotationMatrix());
  if (qn.dot(qe) < 0) qn.coeffs() *= -1.0;
  out.state.q = UnitQuat{qn.w(), qn.x(), qn.y(), qn.z()};
  out.omega_load = (1 - prm.damping) * om - (h / (mq * l)) * xi.cross(u.thrust * (r * e3));
  return out;
}

TEST(Step, MatchesTranscribedEquations) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    PhysicalParams prm = params_with_vehicle_mass(1.0 + 0.5 * (d(rng) + 1.0));
    prm.damping = 0.5 * (d(rng) + 1.0);
    SystemState x;
    x.p = Vec3(d(rng), d(rng), d(rng));
    x.v = Vec3(d(rng), d(rng), d(rng));
    x.q = UnitQuat{1.0, 0.3 * d(rng), 0.3 * d(rng), 0.3 * d(rng)}.normalized();
    x.p_load = x.p + prm.cable_length * Vec3(0.3 * d(rng), 0.3 * d(rng), -1.0).normalized();
    const Vec3 om(d(rng), d(rng), d(rng));
    const ControlInput u{15.0 + 5.0 * d(rng), Vec3(d(rng), d(rng), d(rng))};
    const StepResult got = step(x, om, u, prm);
    const StepResult want = oracle_step(x, om, u, prm);
    EXPECT_LT((got.state.to_vector() - want.state.to_vector()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((got.omega_load - want.omega_load).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(std::abs(got.state.q.norm() - 1.0), 1e-12);
    // Forcing term is orthogonal to the cable.
    const Vec3 forcing = got.omega_load - (1 - prm.damping) * om;
    EXPECT_LT(std::abs(forcing.dot(cable_direction(x, prm))), 1e-12);
  }
}

TEST(Step, DampingWithoutThrust) {
  PhysicalParams prm;
  prm.damping = 0.1;
  auto [x, u] = hover_equilibrium(Vec3::Zero(), prm);
  u.thrust = 0.0;
  const Vec3 om(0.4, -0.2, 0.7);
  const StepResult r = step(x, om, u, prm);
  EXPECT_DOUBLE_EQ(r.omega_load.norm(), (1 - prm.damping) * om.norm());
}

TEST(Step, Deterministic) {
  PhysicalParams prm;
  auto [x, u] = hover_equilibrium(Vec3::Zero(), prm);
  u.omega = Vec3(0.1, 0.2, 0.3);
  u.thrust = 17.0;
  const StepResult a = step(x, Vec3(0.1, 0, 0), u, prm);
  const StepResult b = step(x, Vec3(0.1, 0, 0), u, prm);
  EXPECT_EQ(a.state.to_vector(), b.state.to_vector());
  EXPECT_EQ(a.omega_load, b.omega_load);
}

TEST(Rollout, LengthOneIsStep) {
  PhysicalParams prm;
  auto [x, u] = hover_equilibrium(Vec3::Zero(), prm);
  u.omega = Vec3(0.5, 0, 0);
  const std::vector<ControlInput> controls{u};
  const RolloutResult r = rollout(x, Vec3(0, 0.2, 0), controls, prm);
  const StepResult s = step(x, Vec3(0, 0.2, 0), u, prm);
  ASSERT_EQ(r.states.size(), 1u);
  EXPECT_EQ(r.states[0].to_vector(), s.state.to_vector());
  EXPECT_EQ(r.omega_loads[0], s.omega_load);
}

TEST(Rollout, FullDampingIsMemoryless) {
  PhysicalParams prm;
  prm.damping = 1.0;
  auto [x, u] = hover_equilibrium(Vec3::Zero(), prm);
  u.omega = Vec3(0.3, -0.2, 0.1);
  const std::vector<ControlInput> controls(5, u);
  const RolloutResult r = rollout(x, Vec3(1, 2, 3), controls, prm);
  SystemState prev = x;
  for (std::size_t k = 0; k < controls.size(); ++k) {
    const Vec3 xi = cable_direction(prev, prm);
    const Vec3 re3 = quat_to_rot(prev.q).col(2);
    const Vec3 forcing = -(prm.dt / (prm.m_vehicle * prm.cable_length)) * xi.cross(u.thrust * re3);
    EXPECT_LT((r.omega_loads[k] - forcing).norm(), 1e-14);
    prev = r.states[k];
  }
}

TEST(Rollout, ErrorsCarryStepIndex) {
  PhysicalParams prm;
  EXPECT_THROW(rollout(SystemState{}, Vec3::Zero(), {}, prm), std::invalid_argument);
  SystemState x;
  x.p_load = Vec3(0, 0, 1e-9);
  const std::vector<ControlInput> controls(3);
  try {
    rollout(x, Vec3::Zero(), controls, prm);
    FAIL() << "expected a degenerate state";
  } catch (const DegenerateStateError& e) {
    EXPECT_EQ(e.step(), 0);
  }
}

TEST(LoadAngularVelocity, Estimator) {
  PhysicalParams prm;
  auto [x, u] = hover_equilibrium(Vec3::Zero(), prm);
  EXPECT_EQ(estimate_load_angular_velocity(x, x, prm), Vec3::Zero());

  // Cable swinging in the x-z plane at rate w; the estimate tends to w as h -> 0.
  const double w = 1.3, theta = 0.2;
  auto at = [&](double angle) {
    SystemState s = x;
    s.p_load = x.p + prm.cable_length * Vec3(std::sin(angle), 0, -std::cos(angle));
    return s;
  };
  double prev_err = 1e9;
  for (double h : {1e-2, 1e-3, 1e-4}) {
    PhysicalParams p2 = prm;
    p2.dt = h;
    const SystemState a = at(theta), b = at(theta + w * h);
    const Vec3 est = estimate_load_angular_velocity(a, b, p2);
    const double err = std::abs(est.norm() - w);
    EXPECT_LT(err, prev_err);
    prev_err = err;
    EXPECT_LT(std::abs(est.dot(cable_direction(a, p2))), 1e-12);
  }
  EXPECT_LT(prev_err, 1e-3);
}

}  // namespace
}  // namespace slung

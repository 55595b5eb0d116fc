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

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "slung/errors.hpp"

namespace slung {
namespace {

using testing::pointers;
using testing::rollout_window;
using testing::rollout_windows;

Tensor state_row(const StateVector& x) {
  Tensor t = Tensor::zeros(1, kStateDim);
  for (int j = 0; j < kStateDim; ++j) t[j] = x[j];
  return t;
}

Tensor stack(const std::vector<StateVector>& xs) {
  Tensor t = Tensor::zeros(xs.size(), kStateDim);
  for (std::size_t r = 0; r < xs.size(); ++r)
    for (int j = 0; j < kStateDim; ++j) t(r, j) = xs[r][j];
  return t;
}

StateVector unit_state() {
  StateVector x = StateVector::Zero();
  x[6] = 1.0;
  x[12] = -0.6;
  return x;
}

std::vector<Var> constants(Tape& tape, const std::vector<Tensor>& ts) {
  std::vector<Var> out;
  for (const Tensor& t : ts) out.push_back(tape.constant(t));
  return out;
}

TEST(LossWeightsTest, DefaultsAndValidation) {
  const LossWeights w;
  for (double l : w.lambda) EXPECT_EQ(l, 20.0);
  EXPECT_EQ(w.phi, 5.0);
  EXPECT_EQ(w.psi, 10.0);
  EXPECT_EQ(w.rho, 0.1);
  EXPECT_EQ(w.alpha, 0.1);
  EXPECT_EQ(w.beta, 0.6);
  EXPECT_NO_THROW(w.validate());
  LossWeights bad = w;
  bad.alpha = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = w;
  bad.lambda[2] = -1.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(DecayWeight, ClosedForms) {
  EXPECT_EQ(decay_weight(0.1, 0), 1.0);
  for (std::size_t n = 0; n < 60; ++n) {
    EXPECT_EQ(decay_weight(0.1, n), std::exp(-0.1 * static_cast<double>(n)));
    EXPECT_EQ(decay_weight(0.6, n), std::exp(-0.6 * static_cast<double>(n)));
    if (n > 0) EXPECT_LT(decay_weight(0.6, n), decay_weight(0.6, n - 1));
  }
  EXPECT_NEAR(decay_weight(0.6, 1), 0.548812, 5e-7);
}

TEST(QuatRightMultiply, MatchesHamiltonProduct) {
  std::mt19937_64 rng(3);
  Tape tape;
  const Tensor q = testing::random_tensor(5, 4, rng), e = testing::random_tensor(5, 4, rng);
  const Var out = quat_right_multiply(tape.constant(q), e);
  for (std::size_t r = 0; r < 5; ++r) {
    const UnitQuat a{q(r, 0), q(r, 1), q(r, 2), q(r, 3)}, b{e(r, 0), e(r, 1), e(r, 2), e(r, 3)};
    const Eigen::Vector4d ref = quat_mul(a, b).as_vec();
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(out.value()(r, k), ref[k], 1e-15);
  }
}

TEST(FitLoss, UnitPositionErrorGivesLambda) {
  Tape tape;
  StateVector truth = unit_state(), pred = truth;
  pred[0] += 1.0;
  const Var l = fit_loss({tape.constant(state_row(pred))}, {state_row(truth)}, LossWeights{});
  EXPECT_NEAR(l.value()[0], 20.0, 1e-9);
}

TEST(FitLoss, ZeroAtTruthDecayAndBatchMean) {
  Tape tape;
  const SequenceWindow w = rollout_window(3, 4, 5);
  std::vector<Tensor> truth;
  for (const StateVector& x : w.future_states) truth.push_back(state_row(x));
  EXPECT_LT(fit_loss(constants(tape, truth), truth, LossWeights{}).value()[0], 1e-30);

  // Velocity error 1 at the second step: weight e^{-0.1}.
  std::vector<Tensor> pred = truth;
  pred[1][4] += 1.0;
  EXPECT_NEAR(fit_loss(constants(tape, pred), truth, LossWeights{}).value()[0],
              20.0 * std::exp(-0.1), 1e-12);

  // Two windows, only one off: the batch mean halves it.
  const StateVector x = unit_state();
  StateVector y = x;
  y[11] += 1.0;
  const Tensor t2 = stack({x, x});
  const Var l = fit_loss({tape.constant(stack({x, y}))}, {t2}, LossWeights{});
  EXPECT_NEAR(l.value()[0], 10.0, 1e-12);
}

TEST(FitLoss, QuaternionTermUsesRawEstimate) {
  Tape tape;
  const StateVector truth = unit_state();
  StateVector pred = truth;
  pred.segment<4>(6) *= 2.0;  // q_hat (x) q^-1 = (2, 0, 0, 0), error (1, 0, 0, 0)
  LossWeights w;
  EXPECT_NEAR(fit_loss({tape.constant(state_row(pred))}, {state_row(truth)}, w).value()[0], 20.0,
              1e-12);
  pred.segment<4>(6) = -truth.segment<4>(6);
  EXPECT_NEAR(fit_loss({tape.constant(state_row(pred))}, {state_row(truth)}, w).value()[0], 80.0,
              1e-12);
}

TEST(FitLoss, LengthMismatch) {
  Tape tape;
  const Tensor x = state_row(unit_state());
  EXPECT_THROW(fit_loss({tape.constant(x), tape.constant(x)}, {x}, LossWeights{}), ShapeError);
  EXPECT_THROW(fit_loss({}, {x}, LossWeights{}), ShapeError);
}

TEST(ProjectionLoss, Examples) {
  Tape tape;
  StateVector x = unit_state();
  const LossWeights w;
  EXPECT_EQ(projection_loss({tape.constant(state_row(x))}, w).value()[0], 0.0);
  x.segment<4>(6) << 0, 2, 0, 0;
  EXPECT_NEAR(projection_loss({tape.constant(state_row(x))}, w).value()[0], 10.0, 1e-12);
  x.segment<4>(6).setZero();
  EXPECT_NEAR(projection_loss({tape.constant(state_row(x))}, w).value()[0], 10.0, 1e-12);
}

TEST(SlackLoss, Examples) {
  Tape tape;
  const LossWeights w;
  Tensor zero = Tensor::zeros(1, 13), e1 = Tensor::zeros(1, 13);
  e1[0] = 1.0;
  EXPECT_EQ(slack_loss({tape.constant(zero), tape.constant(zero)}, w).value()[0], 0.0);
  EXPECT_NEAR(slack_loss({tape.constant(e1), tape.constant(zero)}, w).value()[0], 0.1, 1e-12);
  EXPECT_NEAR(slack_loss({tape.constant(zero), tape.constant(e1)}, w).value()[0],
              0.1 * std::exp(-0.6), 1e-12);
  EXPECT_NEAR(slack_loss({tape.constant(zero), tape.constant(e1)}, w).value()[0], 0.054881, 5e-7);
}

TEST(DynamicsStep, BatchedMatchesScalarStep) {
  const PhysicalParams prm;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  constexpr std::size_t kB = 16;
  Tensor x = Tensor::zeros(kB, 13), om = Tensor::zeros(kB, 3), u = Tensor::zeros(kB, 4);
  std::vector<StepResult> ref;
  for (std::size_t r = 0; r < kB; ++r) {
    SystemState s;
    s.p = Vec3(d(rng), d(rng), d(rng));
    s.v = Vec3(d(rng), d(rng), d(rng));
    s.q = UnitQuat{d(rng), d(rng), d(rng), d(rng)}.normalized();
    s.p_load = s.p + prm.cable_length * Vec3(d(rng), d(rng), d(rng)).normalized();
    const Vec3 w(d(rng), d(rng), d(rng));
    const ControlInput c{15.0 + 3 * d(rng), Vec3(d(rng), d(rng), d(rng))};
    ref.push_back(step(s, w, c, prm));
    const StateVector sv = s.to_vector();
    for (int j = 0; j < 13; ++j) x(r, j) = sv[j];
    for (int j = 0; j < 3; ++j) om(r, j) = w[j];
    for (int j = 0; j < 4; ++j) u(r, j) = c.to_vector()[j];
  }
  Tape tape;
  const BatchedStep out = dynamics_step(tape.constant(x), tape.constant(om), u, prm);
  for (std::size_t r = 0; r < kB; ++r) {
    const StateVector sv = ref[r].state.to_vector();
    for (int j = 0; j < 13; ++j) EXPECT_NEAR(out.state.value()(r, j), sv[j], 1e-12) << r << "," << j;
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(out.omega_load.value()(r, j), ref[r].omega_load[j], 1e-12);
  }
}

TEST(PhysicsLoss, VanishesOnExactRollout) {
  const auto ws = rollout_windows(4, 3, 6, 3);
  const WindowBatch batch = WindowBatch::from_windows(pointers(ws), 6);
  Tape tape;
  const auto states = constants(tape, batch.future_states);
  std::vector<Var> slacks(6, tape.constant(Tensor::zeros(4, 13)));
  EXPECT_LT(physics_loss(states, slacks, batch, PhysicalParams{}, LossWeights{}).value()[0], 1e-20);
}

TEST(PhysicsLoss, SingleResidualWeighting) {
  const auto ws = rollout_windows(1, 3, 2, 4);
  const WindowBatch batch = WindowBatch::from_windows(pointers(ws), 2);
  Tape tape;
  const auto states = constants(tape, batch.future_states);
  Tensor s = Tensor::zeros(1, 13);
  s[4] = 1.0;
  const LossWeights w;
  const Var zero = tape.constant(Tensor::zeros(1, 13));
  EXPECT_NEAR(physics_loss(states, {zero, tape.constant(s)}, batch, PhysicalParams{}, w).value()[0],
              5.0 * std::exp(-0.6), 1e-9);
  EXPECT_NEAR(physics_loss(states, {tape.constant(s), zero}, batch, PhysicalParams{}, w).value()[0],
              5.0, 1e-9);
}

// Independent slack construction with the scalar model and its own
// propagation of the load angular velocity.
std::vector<Tensor> absorbing_slacks(const std::vector<Tensor>& pred, const WindowBatch& batch,
                                     const PhysicalParams& prm) {
  const std::size_t b = batch.size;
  std::vector<Tensor> slacks;
  std::vector<StateVector> prev(b);
  std::vector<Vec3> omega(b);
  for (std::size_t r = 0; r < b; ++r) {
    for (int j = 0; j < 13; ++j) prev[r][j] = batch.history_states.back()(r, j);
    omega[r] = Vec3(batch.omega_load(r, 0), batch.omega_load(r, 1), batch.omega_load(r, 2));
  }
  for (std::size_t n = 0; n < pred.size(); ++n) {
    Tensor s = Tensor::zeros(b, 13);
    for (std::size_t r = 0; r < b; ++r) {
      ControlVector uv;
      for (int j = 0; j < 4; ++j) uv[j] = batch.step_controls[n](r, j);
      const StepResult f = step(SystemState::from_vector(prev[r]), omega[r],
                                ControlInput::from_vector(uv), prm);
      const StateVector fv = f.state.to_vector();
      for (int j = 0; j < 13; ++j) {
        s(r, j) = fv[j] - pred[n](r, j);
        prev[r][j] = pred[n](r, j);
      }
      omega[r] = f.omega_load;
    }
    slacks.push_back(std::move(s));
  }
  return slacks;
}

TEST(SlackAbsorption, ConstructedSlacksZeroThePhysicsTerm) {
  const PhysicalParams prm;
  const LossWeights w;
  std::mt19937_64 rng(23);
  std::normal_distribution<double> d(0.0, 0.05);
  for (int trial = 0; trial < 5; ++trial) {
    const auto ws = rollout_windows(3, 4, 5, 10 + trial);
    const WindowBatch batch = WindowBatch::from_windows(pointers(ws), 5);
    std::vector<Tensor> pred = batch.future_states;
    for (Tensor& t : pred) {
      for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t j = 0; j < 13; ++j) t(r, j) += d(rng);
        // Unit quaternions keep the scalar oracle on the same footing.
        double nq = 0.0;
        for (std::size_t j = 6; j < 10; ++j) nq += t(r, j) * t(r, j);
        for (std::size_t j = 6; j < 10; ++j) t(r, j) /= std::sqrt(nq);
      }
    }
    const auto slacks = absorbing_slacks(pred, batch, prm);
    Tape tape;
    const auto sv = constants(tape, slacks);
    const double phys = physics_loss(constants(tape, pred), sv, batch, prm, w).value()[0];
    EXPECT_LT(phys, 1e-12);

    double expected = 0.0;
    for (std::size_t n = 0; n < slacks.size(); ++n) {
      double sq = 0.0;
      for (double v : slacks[n].values()) sq += v * v;
      expected += w.rho * std::exp(-w.beta * static_cast<double>(n)) * sq / 3.0;
    }
    EXPECT_NEAR(slack_loss(sv, w).value()[0], expected, 1e-9);
  }
}

TEST(SlackAbsorption, HoldsForNonUnitPredictions) {
  // With raw quaternions the batched model is its own reference.
  const PhysicalParams prm;
  std::mt19937_64 rng(29);
  const auto ws = rollout_windows(2, 3, 4, 40);
  const WindowBatch batch = WindowBatch::from_windows(pointers(ws), 4);
  std::vector<Tensor> pred = batch.future_states;
  for (Tensor& t : pred)
    for (double& v : t.values()) v += 0.2 * std::uniform_real_distribution<double>(-1, 1)(rng);
  Tape tape;
  std::vector<Var> slacks;
  Var x = tape.constant(batch.history_states.back()), om = tape.constant(batch.omega_load);
  for (std::size_t n = 0; n < pred.size(); ++n) {
    const BatchedStep f = dynamics_step(x, om, batch.step_controls[n], prm);
    Tensor s = f.state.value();
    for (std::size_t i = 0; i < s.size(); ++i) s[i] -= pred[n][i];
    slacks.push_back(tape.constant(std::move(s)));
    x = tape.constant(pred[n]);
    om = f.omega_load;
  }
  EXPECT_LT(physics_loss(constants(tape, pred), slacks, batch, prm, LossWeights{}).value()[0], 1e-12);
}

TEST(PhysicsLoss, DegenerateCableReportsStep) {
  const auto ws = rollout_windows(1, 3, 3, 5);
  const WindowBatch batch = WindowBatch::from_windows(pointers(ws), 3);
  std::vector<Tensor> pred = batch.future_states;
  for (int j = 0; j < 3; ++j) pred[1](0, 10 + j) = pred[1](0, j);
  Tape tape;
  std::vector<Var> slacks(3, tape.constant(Tensor::zeros(1, 13)));
  try {
    physics_loss(constants(tape, pred), slacks, batch, PhysicalParams{}, LossWeights{});
    FAIL() << "expected DegenerateStateError";
  } catch (const DegenerateStateError& e) {
    EXPECT_EQ(e.step(), 2);
  }
}

TEST(TotalLoss, SumOfTermsAndAblations) {
  const auto ws = rollout_windows(3, 4, 3, 6);
  const WindowBatch batch = WindowBatch::from_windows(pointers(ws), 3);
  Seq2SeqModel model(testing::small_config(4, 3), 2);
  model.set_normalization(testing::fixture_normalization());
  Tape tape;
  const auto p = model.bind_constant(tape);
  const auto f = model.forward(p, batch, 3);
  const LossTerms t = total_loss(f, batch, PhysicalParams{}, LossWeights{});
  const auto v = t.values();
  EXPECT_GT(v.fit, 0.0);
  EXPECT_GT(v.physics, 0.0);
  EXPECT_GT(v.projection, 0.0);
  EXPECT_GT(v.slack, 0.0);
  EXPECT_NEAR(v.total, v.fit + v.physics + v.projection + v.slack, 1e-12 * v.total);

  LossWeights nophys;
  nophys.phi = 0.0;
  nophys.rho = 0.0;
  const auto a = total_loss(f, batch, PhysicalParams{}, nophys).values();
  EXPECT_EQ(a.physics, 0.0);
  EXPECT_EQ(a.slack, 0.0);
  EXPECT_EQ(a.fit, v.fit);
  EXPECT_EQ(a.total, a.fit + a.projection);
}

TEST(TotalLoss, ZeroWhenEverythingMatches) {
  const auto ws = rollout_windows(2, 3, 4, 8);
  const WindowBatch batch = WindowBatch::from_windows(pointers(ws), 4);
  Tape tape;
  Seq2SeqModel::Forward f;
  for (const Tensor& t : batch.future_states) {
    f.states.push_back(tape.constant(t));
    f.slacks.push_back(tape.constant(Tensor::zeros(2, 13)));
  }
  EXPECT_LT(total_loss(f, batch, PhysicalParams{}, LossWeights{}).values().total, 1e-20);
}

TEST(TotalLoss, NonNegativeOnRandomInputs) {
  std::mt19937_64 rng(31);
  const auto ws = rollout_windows(2, 3, 3, 9);
  const WindowBatch batch = WindowBatch::from_windows(pointers(ws), 3);
  for (int trial = 0; trial < 20; ++trial) {
    Tape tape;
    Seq2SeqModel::Forward f;
    for (const Tensor& t : batch.future_states) {
      Tensor x = t;
      for (double& v : x.values()) v += 0.3 * std::uniform_real_distribution<double>(-1, 1)(rng);
      f.states.push_back(tape.constant(x));
      f.slacks.push_back(tape.constant(testing::random_tensor(2, 13, rng, 0.1)));
    }
    const auto v = total_loss(f, batch, PhysicalParams{}, LossWeights{}).values();
    EXPECT_GE(v.fit, 0.0);
    EXPECT_GE(v.physics, 0.0);
    EXPECT_GE(v.projection, 0.0);
    EXPECT_GE(v.slack, 0.0);
  }
}

TEST(LossGradient, DynamicsStepMatchesFiniteDifferences) {
  const PhysicalParams prm;
  const auto ws = rollout_windows(3, 2, 1, 12);
  const WindowBatch batch = WindowBatch::from_windows(pointers(ws), 1);
  const Tensor u = batch.step_controls[0];
  std::mt19937_64 rng(4);
  const Tensor wsum = testing::random_tensor(3, 13, rng), wom = testing::random_tensor(3, 3, rng);
  const double err = testing::check_inputs(
      [&](Tape& t, const std::vector<Var>& in) {
        const BatchedStep f = dynamics_step(in[0], in[1], u, prm);
        return add(sum(mul(f.state, t.constant(wsum))), sum(mul(f.omega_load, t.constant(wom))));
      },
      {batch.history_states.back(), testing::random_tensor(3, 3, rng, 0.5)});
  EXPECT_LT(err, 1e-6);
}

class ModelLossGradient : public ::testing::TestWithParam<int> {};

TEST_P(ModelLossGradient, MatchesFiniteDifferences) {
  const int seed = GetParam();
  const ModelConfig cfg = testing::small_config(4, 3);
  Seq2SeqModel model(cfg, static_cast<std::uint64_t>(seed));
  model.set_normalization(testing::fixture_normalization());
  const auto ws = rollout_windows(2, 4, 3, static_cast<std::uint64_t>(100 + seed));
  const WindowBatch batch = WindowBatch::from_windows(pointers(ws), 3);
  std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
  const double err = testing::check_parameters(
      model.params(),
      [&](Tape& t) {
        const auto p = model.bind(t);
        return total_loss(model.forward(p, batch, 3), batch, PhysicalParams{}, LossWeights{}).total;
      },
      6, rng);
  EXPECT_LT(err, 1e-4);
}

INSTANTIATE_TEST_SUITE_P(Seeds, ModelLossGradient, ::testing::Range(0, 3));

}  // namespace
}  // namespace slung

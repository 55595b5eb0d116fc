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

// Small physically consistent windows for model and loss tests.

#ifndef SLUNG_TESTS_FIXTURES_HPP_
#define SLUNG_TESTS_FIXTURES_HPP_

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "slung/dynamics.hpp"
#include "slung/seq2seq.hpp"
#include "slung/window.hpp"

namespace slung::testing {

inline std::vector<double> flat(const Tensor& t) {
  return std::vector<double>(t.values().begin(), t.values().end());
}

// Rolls the model forward from hover under gently varying controls and cuts
// one window of m history and n future steps.
inline SequenceWindow rollout_window(std::size_t m, std::size_t n, std::uint64_t seed,
                                     const PhysicalParams& prm = {}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  auto [x0, u0] = hover_equilibrium(Vec3(d(rng), d(rng), 1.0 + d(rng)), prm);
  const double a = 0.05 * d(rng), b = 0.05 * d(rng), c = 0.3 * d(rng);
  std::vector<ControlInput> controls(m + n);
  for (std::size_t k = 0; k < controls.size(); ++k) {
    const double t = 0.2 * static_cast<double>(k);
    controls[k].thrust = u0.thrust * (1.0 + 0.02 * std::sin(t + c));
    controls[k].omega = Vec3(a * std::cos(t), b * std::sin(1.3 * t), 0.02 * c);
  }
  const RolloutResult r = rollout(x0, Vec3::Zero(), controls, prm);
  // r.states[k] is the state after controls[k]; prepend x0 for a length m+n+1 path.
  std::vector<SystemState> path{x0};
  path.insert(path.end(), r.states.begin(), r.states.end());

  SequenceWindow w;
  for (std::size_t k = 0; k < m; ++k) {
    w.history_states.push_back(path[k].to_vector());
    w.history_controls.push_back(controls[k].to_vector());
  }
  for (std::size_t k = m; k < m + n; ++k) {
    w.future_states.push_back(path[k].to_vector());
    w.future_controls.push_back(controls[k].to_vector());
  }
  w.omega_load = m >= 2 ? r.omega_loads[m - 2] : Vec3::Zero();
  w.log_id = "fixture";
  return w;
}

inline std::vector<SequenceWindow> rollout_windows(std::size_t count, std::size_t m, std::size_t n,
                                                   std::uint64_t seed) {
  std::vector<SequenceWindow> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(rollout_window(m, n, seed * 1000 + i));
  return out;
}

inline std::vector<const SequenceWindow*> pointers(const std::vector<SequenceWindow>& ws) {
  std::vector<const SequenceWindow*> out;
  for (const SequenceWindow& w : ws) out.push_back(&w);
  return out;
}

// Scales that put the fixture windows at order one.
inline Normalization fixture_normalization() {
  Normalization n;
  n.state_scale.setConstant(0.5);
  n.state_scale.segment<4>(6).setConstant(0.1);
  n.control_mean << 14.7, 0, 0, 0;
  n.control_scale << 0.5, 0.1, 0.1, 0.1;
  n.delta_scale.setConstant(0.01);
  return n;
}

inline ModelConfig small_config(std::size_t m, std::size_t n, std::size_t layers = 2) {
  ModelConfig c;
  c.latent_dim = 6;
  c.hidden_dim = 5;
  c.num_layers = layers;
  c.attention_dim = 4;
  c.history = m;
  c.horizon = n;
  return c;
}

}  // namespace slung::testing

#endif  // SLUNG_TESTS_FIXTURES_HPP_

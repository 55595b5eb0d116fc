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

#ifndef SLUNG_WINDOW_HPP_
#define SLUNG_WINDOW_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "slung/dynamics.hpp"

namespace slung {

// M past (state, control) pairs followed by the next N controls and states.
// future_controls[n] is applied to the state future_states[n]; the decoder
// and the physics terms step with history_controls.back() first, then
// future_controls[0 .. N-2].
struct SequenceWindow {
  std::vector<StateVector> history_states;
  std::vector<ControlVector> history_controls;
  std::vector<ControlVector> future_controls;
  std::vector<StateVector> future_states;
  // Load angular velocity at the last history step.
  Vec3 omega_load = Vec3::Zero();
  std::string log_id;
  std::size_t start = 0;

  std::size_t history_length() const { return history_states.size(); }
  std::size_t horizon() const { return future_states.size(); }
  // Control applied at the n-th decode step (n = 0 is the last history step).
  const ControlVector& step_control(std::size_t n) const {
    return n == 0 ? history_controls.back() : future_controls[n - 1];
  }
};

}  // namespace slung

#endif  // SLUNG_WINDOW_HPP_

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

// Prediction metrics and baseline comparison reports.
//
// Error norms are taken per state group: position, velocity, payload position
// use the Euclidean norm of the difference; the attitude group uses the norm
// of quat_error(q_hat / |q_hat|, q). The "combined" error of one step is the
// norm of the four group errors stacked, sqrt(sum_g e_g^2).

#ifndef SLUNG_EVALKIT_HPP_
#define SLUNG_EVALKIT_HPP_

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "slung/dynamics.hpp"
#include "slung/seq2seq.hpp"
#include "slung/window.hpp"

namespace slung {

enum class StateGroup { kPosition, kVelocity, kQuaternion, kPayload };
inline constexpr std::array<StateGroup, 4> kStateGroups{
    StateGroup::kPosition, StateGroup::kVelocity, StateGroup::kQuaternion, StateGroup::kPayload};
const char* group_name(StateGroup g);

double group_error(StateGroup g, const StateVector& prediction, const StateVector& truth);
double combined_error(const StateVector& prediction, const StateVector& truth);

// One predicted (or true) future per window, N states each.
using Predictions = std::vector<std::vector<StateVector>>;

// Truth slices future_states[0 .. horizon-1] of every window. Throws
// ShapeError if a window is shorter than `horizon`.
Predictions truths_of(const std::vector<SequenceWindow>& windows, std::size_t horizon);

struct MaeStats {
  double mean = 0, std = 0, q1 = 0, q3 = 0;
};

// Stats per step k (index 0 is one step ahead). std is the population
// deviation; quartiles interpolate linearly between order statistics.
struct MaeCurve {
  std::array<std::vector<MaeStats>, 4> groups;  // indexed like kStateGroups
  std::vector<MaeStats> combined;
  std::size_t horizon() const { return combined.size(); }
  const std::vector<MaeStats>& group(StateGroup g) const {
    return groups[static_cast<std::size_t>(g)];
  }
};

// Throws ShapeError on empty input, count mismatch or unequal horizons.
MaeCurve mae_curve(const Predictions& predictions, const Predictions& truths);

struct RmseRow {
  double position = 0, velocity = 0, quaternion = 0, payload = 0;
  double combined = 0;  // sqrt of the sum of the four group mean squared errors
};
RmseRow rmse(const Predictions& predictions, const Predictions& truths);

struct NamedPredictions {
  std::string name;
  std::optional<Predictions> predictions;  // nullopt: model unavailable
};

struct RmseReport {
  std::size_t horizon = 0;
  std::vector<std::pair<std::string, RmseRow>> rows;
  const RmseRow* find(const std::string& name) const;
};

// Rows follow the input order; unavailable models are omitted with a warning.
RmseReport rmse_report(const std::vector<NamedPredictions>& models, const Predictions& truths);

// Open-loop rollout of the discrete model from the last history state with
// the window's load angular velocity. A rollout that hits a degenerate cable
// holds its last valid state for the remaining steps and warns.
Predictions physics_predictions(const std::vector<SequenceWindow>& windows, std::size_t horizon,
                                const PhysicalParams& params);
Predictions model_predictions(const Seq2SeqModel& model, const std::vector<SequenceWindow>& windows,
                              std::size_t horizon, std::size_t batch_size = 64);

// First step k (1-based) where `model` has a strictly lower mean combined
// error than `baseline`; nullopt when it never does.
std::optional<std::size_t> crossing_index(const MaeCurve& model, const MaeCurve& baseline);

// Rows "k,group,mean,std,q1,q3" with k 1-based and group one of position,
// velocity, quaternion, payload, combined.
void write_mae_csv(const std::filesystem::path& path, const MaeCurve& curve);
void write_rmse_json(const std::filesystem::path& path, const RmseReport& report,
                     const std::string& manifest);

struct ComparisonSummary {
  std::size_t horizon = 0;
  std::vector<std::pair<std::string, MaeCurve>> curves;
  RmseReport rmse;
  // Crossing of each non-baseline model against the baseline.
  std::vector<std::pair<std::string, std::optional<std::size_t>>> crossings;
};

// Writes mae_<name>.csv for each available model, rmse.json and
// comparison.json into out_dir. `baseline` names the reference entry
// (normally "physics"); `manifest` is recorded in every JSON report.
ComparisonSummary compare_predictors(const std::vector<NamedPredictions>& models,
                                     const Predictions& truths, const std::string& baseline,
                                     const std::filesystem::path& out_dir,
                                     const std::string& manifest);

}  // namespace slung

#endif  // SLUNG_EVALKIT_HPP_

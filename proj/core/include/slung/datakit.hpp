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

// Flight logs, sliding windows, log-level dataset splits and a closed-loop
// synthetic flight generator.

#ifndef SLUNG_DATAKIT_HPP_
#define SLUNG_DATAKIT_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slung/dynamics.hpp"
#include "slung/seq2seq.hpp"
#include "slung/window.hpp"

namespace slung {

// Uniformly sampled states and the controls applied at each row.
struct FlightLog {
  std::string id;
  double dt = 0.03;
  std::vector<double> t;
  std::vector<StateVector> states;
  std::vector<ControlVector> controls;
  // Load angular velocity per row, when the source recorded it.
  std::vector<Vec3> omega_load;

  std::size_t size() const { return states.size(); }
  bool has_omega_load() const { return !omega_load.empty(); }
};

// Column names as they appear in a source file, keyed by the canonical names
// t, px, py, pz, vx, vy, vz, qw, qx, qy, qz, plx, ply, plz, thrust, wx, wy, wz
// and the optional olx, oly, olz. Unmapped names are looked up verbatim.
struct LogSchema {
  std::map<std::string, std::string> columns;
  double time_tolerance = 1e-6;   // s
  double quat_tolerance = 1e-3;   // | |q| - 1 | above this is an error

  std::string column(const std::string& canonical) const;
};

// Writes the canonical CSV: a "# slung-log v1 ..." metadata line carrying dt
// and the id, the header row, then one row per sample with round-trip
// precision. Omega columns are appended when present.
void write_log(const std::filesystem::path& path, const FlightLog& log);

// Parses and validates a log. Throws DataError naming the file and line for
// malformed rows, timestamp gaps, negative thrust or quaternions off the unit
// sphere by more than the tolerance; smaller deviations are renormalized with
// a warning. Quaternion signs are made continuous.
FlightLog load_log(const std::filesystem::path& path, const LogSchema& schema = {});

// Windows of m history rows and n future rows starting every `stride` rows.
// The load angular velocity at the last history row comes from the log when
// recorded; otherwise it is estimated from the two preceding rows and
// advanced one step with the model. Too-short logs give an empty result and
// a warning.
std::vector<SequenceWindow> make_windows(const FlightLog& log, std::size_t m, std::size_t n,
                                         std::size_t stride = 1, const PhysicalParams& params = {});
std::size_t window_count(std::size_t length, std::size_t m, std::size_t n, std::size_t stride = 1);

enum class Split { kTrain = 0, kValidation = 1, kTest = 2 };
const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct SplitAssignment {
  std::vector<Split> assignment;          // one entry per log
  std::array<std::size_t, 3> windows{};   // window totals per split
  std::array<double, 3> achieved{};       // window fractions per split
};

// Assigns whole logs to train/validation/test. Logs are visited in a seeded
// random order and each goes to the split furthest below its target window
// count; a split left empty takes the smallest log from the most populated
// one. Throws std::invalid_argument with fewer than three logs or invalid
// fractions.
SplitAssignment assign_splits(const std::vector<std::size_t>& window_counts,
                              std::array<double, 3> fractions = {0.58, 0.17, 0.25},
                              std::uint64_t seed = 0);

// Input scales from training logs: per-component mean and standard
// deviation of states and controls, and the deviation of one-step state
// increments (root mean square) for the output scale. Deviations are floored so that nearly
// constant components do not blow up.
Normalization compute_normalization(const std::vector<const FlightLog*>& logs);

// Unmodeled effects applied by the synthetic generator.
struct DisturbanceConfig {
  double drag_vehicle = 0.25;  // kg/s
  double drag_load = 0.05;     // kg/s
  Vec3 wind = Vec3::Zero();    // m/s
  double sigma_position = 1e-3;
  double sigma_velocity = 1e-2;
  double sigma_quat = 1e-3;

  static DisturbanceConfig none();
};

// Cascaded PD position loop with thrust-vector attitude extraction.
struct ControllerGains {
  double kp = 4.0;
  double kd = 3.0;
  double kr = 12.0;
  double kw = 1.0;          // cable swing damping
  double rate_limit = 4.0;  // rad/s per axis
};

enum class Trajectory { kHover, kCircle, kLemniscate, kStep };
const char* trajectory_name(Trajectory t);
Trajectory trajectory_from_name(const std::string& name);

// One step of the true plant: the model plus linear drag on vehicle and load
// relative to the wind.
StepResult disturbed_step(const SystemState& x, const Vec3& omega_load, const ControlInput& u,
                          const PhysicalParams& params, const DisturbanceConfig& disturbance);

// Closed-loop flight of `steps` rows. The seed draws the reference shape
// (center, size, period, waypoints) and the measurement noise. Logged states
// are measured (noisy); controls and load angular velocity are the true ones.
// Throws NumericError naming the trajectory and seed if the loop diverges.
FlightLog generate_synthetic(const PhysicalParams& params, const DisturbanceConfig& disturbance,
                             Trajectory trajectory, std::size_t steps, std::uint64_t seed,
                             const ControllerGains& gains = {});

// Log list with split labels and window settings, stored as JSON.
struct DatasetManifest {
  struct Entry {
    std::string file;  // relative to the manifest directory
    std::string id;
    std::size_t length = 0;
    Split split = Split::kTrain;
  };
  std::vector<Entry> logs;
  std::size_t history = 50;
  std::size_t horizon = 25;
  std::size_t stride = 1;
  double dt = 0.03;
  std::uint64_t seed = 0;
  std::array<std::size_t, 3> windows{};
  std::array<double, 3> achieved{};

  void save(const std::filesystem::path& path) const;
  // Throws DataError on unreadable or inconsistent manifests.
  static DatasetManifest load(const std::filesystem::path& path);
};

// FNV-1a over the bytes of every listed log, in manifest order, as hex.
std::string dataset_hash(const DatasetManifest& manifest, const std::filesystem::path& base_dir);

// Loaded logs of one split.
std::vector<FlightLog> load_split(const DatasetManifest& manifest,
                                  const std::filesystem::path& base_dir, Split split,
                                  const LogSchema& schema = {});

}  // namespace slung

#endif  // SLUNG_DATAKIT_HPP_

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

// End-to-end plumbing shared by the command line tool and the acceptance
// runner: run configuration, dataset generation, training runs and
// evaluation reports.

#ifndef SLUNG_PIPELINE_HPP_
#define SLUNG_PIPELINE_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "slung/datakit.hpp"
#include "slung/evalkit.hpp"
#include "slung/loss.hpp"
#include "slung/seq2seq.hpp"
#include "slung/trainer.hpp"

namespace slung {

struct DataConfig {
  std::uint64_t seed = 0;
  std::size_t logs = 12;
  std::size_t min_length = 197;
  std::size_t max_length = 799;
  std::size_t stride = 1;  // window stride for training and evaluation
  std::array<double, 3> fractions{0.58, 0.17, 0.25};
  std::vector<Trajectory> trajectories{Trajectory::kHover, Trajectory::kCircle,
                                       Trajectory::kLemniscate, Trajectory::kStep};
  DisturbanceConfig disturbance;
  ControllerGains controller;
};

struct RunConfig {
  std::string profile = "desk";
  std::uint64_t seed = 0;  // model initialization and batch order
  Variant variant = Variant::kFull;
  ModelConfig model;
  TrainConfig train;
  LossWeights loss;
  PhysicalParams physics;
  DataConfig data;

  static RunConfig desk();
  static RunConfig paper();
  // "desk" or "paper"; throws std::invalid_argument otherwise.
  static RunConfig profile_named(const std::string& name);
  // Throws std::invalid_argument.
  void validate() const;
};

// JSON text with optional blocks "model", "train", "loss", "physics", "data"
// and top-level "profile", "seed", "variant". Keys present override `base`;
// unknown keys and wrong types throw DataError.
RunConfig parse_run_config(const std::string& json_text, const RunConfig& base);
RunConfig load_run_config(const std::filesystem::path& path, const RunConfig& base);
std::string run_config_json(const RunConfig& config);

// Writes logs/<id>.csv and dataset.json under out_dir. Log i follows
// trajectories[i mod size] with a length drawn uniformly from
// [min_length, max_length]. Returns the manifest path.
std::filesystem::path generate_dataset(const RunConfig& config, const std::filesystem::path& out_dir);

// Windows of every log of one split.
std::vector<SequenceWindow> split_windows(const DatasetManifest& manifest,
                                          const std::filesystem::path& base_dir, Split split,
                                          std::size_t history, std::size_t horizon,
                                          std::size_t stride, const PhysicalParams& params);

struct RunManifest {
  std::string config_json;  // effective configuration, variant applied
  std::string variant;
  std::uint64_t seed = 0;
  std::string dataset;
  std::string dataset_hash;
  std::size_t parameter_count = 0;
  std::size_t train_windows = 0;
  std::size_t validation_windows = 0;
  std::size_t best_epoch = 0;
  std::size_t epochs = 0;  // epochs with parameter updates
  double best_validation = 0.0;
  std::string stop_reason;
  std::string checkpoint = "model.ckpt";
  std::string final_checkpoint = "final.ckpt";
  std::string training_log = "training_log.csv";

  void save(const std::filesystem::path& path) const;
  static RunManifest load(const std::filesystem::path& path);
};

struct TrainedRun {
  std::filesystem::path manifest_path;
  RunManifest manifest;
  TrainResult result;
};

// Normalization from the training logs, windows from the train and
// validation splits, training, then model.ckpt (best), final.ckpt,
// training_log.csv and run.json in out_dir.
TrainedRun train_run(const RunConfig& config, const std::filesystem::path& dataset_manifest,
                     const std::filesystem::path& out_dir, const TrainHooks& hooks = {});

// Model rebuilt from a run manifest and its best checkpoint.
Seq2SeqModel load_run_model(const std::filesystem::path& run_manifest, RunConfig* config = nullptr);

struct EvaluationSpec {
  std::filesystem::path dataset;
  // Named run manifests; nullopt or a missing file leaves the row out.
  std::vector<std::pair<std::string, std::optional<std::filesystem::path>>> runs;
  std::size_t horizon = 50;
  std::size_t stride = 0;  // 0: the dataset's stride
  PhysicalParams physics;
};

// Physics baseline plus every available run on the test split. Writes
// evaluation.json (dataset, hash, runs, horizon) next to the reports and
// references it from them. Throws DataError when the test split is empty.
ComparisonSummary evaluate_runs(const EvaluationSpec& spec, const std::filesystem::path& out_dir);

// One window cut from a log at row `start`; needs start + history + horizon
// rows.
SequenceWindow window_at(const FlightLog& log, std::size_t start, std::size_t history,
                         std::size_t horizon, const PhysicalParams& params);

}  // namespace slung

#endif  // SLUNG_PIPELINE_HPP_

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

// Adam with decoupled weight decay and the epoch loop with validation-based
// early stopping.

#ifndef SLUNG_TRAINER_HPP_
#define SLUNG_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "slung/dynamics.hpp"
#include "slung/loss.hpp"
#include "slung/parameter.hpp"
#include "slung/seq2seq.hpp"
#include "slung/window.hpp"

namespace slung {

struct TrainConfig {
  double lr = 1e-4;
  double weight_decay = 0.05;
  // Decoupled (AdamW) when true; otherwise wd * param is added to the gradient.
  bool decoupled_weight_decay = true;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 500;
  std::size_t patience = 50;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 0.0;   // global gradient norm limit, 0 = off
  double max_seconds = 0.0; // wall-clock budget, 0 = none

  static TrainConfig desk() { return {}; }
  static TrainConfig paper();
  // Throws std::invalid_argument.
  void validate() const;
};

struct AdamState {
  std::vector<Tensor> m, v;  // per trainable parameter, store order
  std::size_t step = 0;
};

// Allocates zero moments for every trainable parameter.
AdamState make_adam_state(const ParameterStore& params);

// One update from the gradients held in the store. Throws ShapeError when a
// gradient or moment does not match its parameter.
void adam_step(ParameterStore& params, AdamState& state, const TrainConfig& config);

// Scales all trainable gradients so their joint L2 norm is at most max_norm.
// Returns the norm before scaling.
double clip_gradients(ParameterStore& params, double max_norm);

struct EpochRecord {
  std::size_t epoch = 0;  // 0 = before the first update
  LossTerms::Values train;
  LossTerms::Values validation;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_validation = 0.0;
  ParameterStore best_params;
  ParameterStore final_params;  // after the last epoch run
  std::string stop_reason;  // "patience", "max_epochs" or "time_budget"
};

struct TrainHooks {
  // Called after every epoch record, including epoch 0.
  std::function<void(const EpochRecord&)> on_epoch;
  // Replaces the validation evaluation (tests of the stopping rule).
  std::function<LossTerms::Values(std::size_t epoch)> validation_override;
};

// Mean loss terms over windows, evaluated in batches without gradients.
LossTerms::Values evaluate_loss(const Seq2SeqModel& model, const std::vector<SequenceWindow>& windows,
                                const LossWeights& weights, const PhysicalParams& params,
                                std::size_t batch_size);

// Seeded shuffle, mini-batch Adam steps, validation after every epoch and
// early stopping on the total validation loss. Leaves the model holding the
// best-validation parameters. Throws DataError on empty splits and
// NumericError when a loss turns non-finite.
TrainResult train(Seq2SeqModel& model, const std::vector<SequenceWindow>& train_windows,
                  const std::vector<SequenceWindow>& validation_windows, const LossWeights& weights,
                  const PhysicalParams& params, const TrainConfig& config,
                  const TrainHooks& hooks = {});

// CSV with columns epoch, split, L_fit, L_physics, L_projection, L_slack, total.
void write_training_log(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

// Ablation rows: full model, no physics (phi = rho = 0, no slack head) and
// no slack (slack head removed, physics kept).
enum class Variant { kFull, kNoPhysics, kNoSlack };
const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);
void apply_variant(Variant v, ModelConfig& model, LossWeights& weights);

}  // namespace slung

#endif  // SLUNG_TRAINER_HPP_

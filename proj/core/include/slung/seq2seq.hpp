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

// LSTM encoder-decoder with additive attention for multi-step state
// prediction. All graph-level calls are batched: row b of every tensor
// belongs to window b.

#ifndef SLUNG_SEQ2SEQ_HPP_
#define SLUNG_SEQ2SEQ_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "slung/autodiff.hpp"
#include "slung/parameter.hpp"
#include "slung/window.hpp"

namespace slung {

struct ModelConfig {
  std::size_t state_dim = kStateDim;
  std::size_t control_dim = kControlDim;
  std::size_t latent_dim = 32;
  std::size_t hidden_dim = 64;
  std::size_t num_layers = 2;
  std::size_t attention_dim = 32;
  std::size_t history = 50;  // M
  std::size_t horizon = 25;  // N
  bool slack_head = true;

  static ModelConfig desk() { return {}; }
  // 238,906 trainable parameters with the slack head.
  static ModelConfig paper();

  // Throws std::invalid_argument on zero sizes or non-default state/control dims.
  void validate() const;
};

// Fixed input/output scaling, stored as non-trainable parameters so that it
// travels with checkpoints. The network sees (x - state_mean) / state_scale
// and predicts increments in units of delta_scale.
struct Normalization {
  StateVector state_mean = StateVector::Zero();
  StateVector state_scale = StateVector::Ones();
  ControlVector control_mean = ControlVector::Zero();
  ControlVector control_scale = ControlVector::Ones();
  StateVector delta_scale = StateVector::Ones();
};

// Time-major tensors for a batch of windows.
struct WindowBatch {
  std::size_t size = 0;
  std::vector<Tensor> history_states;    // M x [B, 13]
  std::vector<Tensor> history_controls;  // M x [B, 4]
  std::vector<Tensor> step_controls;     // horizon x [B, 4], control of decode step n
  std::vector<Tensor> future_states;     // horizon x [B, 13]
  Tensor omega_load;                     // [B, 3]

  // Throws ShapeError when windows disagree in length or are shorter than
  // `horizon`.
  static WindowBatch from_windows(std::span<const SequenceWindow* const> windows,
                                  std::size_t horizon);
  std::size_t horizon() const { return future_states.size(); }
};

struct PredictionOutput {
  std::vector<StateVector> states;  // x_hat_M ... x_hat_{M+N-1}, quaternions not normalized
  std::vector<StateVector> slacks;
};

class Seq2SeqModel {
 public:
  explicit Seq2SeqModel(ModelConfig config, std::uint64_t seed = 0);

  const ModelConfig& config() const { return config_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }
  std::size_t parameter_count() const { return params_.scalar_count(true); }

  void set_normalization(const Normalization& norm);
  Normalization normalization() const;

  // Parameters placed on a tape, either as gradient leaves or constants.
  class Bound {
   public:
    const Var& operator()(const std::string& name) const;
    Tape& tape() const { return *tape_; }

   private:
    friend class Seq2SeqModel;
    Tape* tape_ = nullptr;
    std::unordered_map<std::string, Var> vars_;
  };
  Bound bind(Tape& tape);              // trainable leaves
  Bound bind_constant(Tape& tape) const;

  struct LstmState {
    std::vector<Var> h, c;  // one per layer, [B, H]
  };
  struct Encoded {
    Var values;  // [M*B, H] top-layer outputs, row i*B + b
    Var keys;    // values * W_k, [M*B, A]
    LstmState final;
  };
  struct DecodeResult {
    Var state;      // [B, 13]
    Var slack;      // [B, 13]
    Var attention;  // [B, M]
    LstmState next;
  };
  struct Forward {
    std::vector<Var> states;
    std::vector<Var> slacks;
    std::vector<Var> attention;
  };

  // x is raw (unnormalized) [B, 13], u raw [B, 4]. Returns [B, latent].
  Var embed(const Bound& p, const std::string& prefix, const Var& x, const Var& u) const;
  Encoded encode(const Bound& p, const WindowBatch& batch) const;
  // Context vector [B, H]; writes the attention weights [B, M] if asked.
  Var attend(const Bound& p, const Var& query, const Encoded& enc, Var* weights = nullptr) const;
  DecodeResult decode_step(const Bound& p, const Var& x_in, const Var& u, const LstmState& hidden,
                           const Encoded& enc) const;
  // Teacher step from the last measured state, then recursive feedback.
  Forward forward(const Bound& p, const WindowBatch& batch, std::size_t horizon) const;

  PredictionOutput predict(const SequenceWindow& window, std::size_t horizon) const;
  std::vector<PredictionOutput> predict_batch(std::span<const SequenceWindow* const> windows,
                                              std::size_t horizon) const;

 private:
  void add_linear(const std::string& name, std::size_t in, std::size_t out, std::uint64_t& stream);
  void add_lstm(const std::string& name, std::size_t in, std::size_t hidden, std::uint64_t& stream);
  Var linear(const Bound& p, const std::string& name, const Var& x) const;
  Var lstm(const Bound& p, const std::string& name, const Var& x, Var& h, Var& c) const;

  ModelConfig config_;
  std::uint64_t seed_;
  ParameterStore params_;
};

}  // namespace slung

#endif  // SLUNG_SEQ2SEQ_HPP_

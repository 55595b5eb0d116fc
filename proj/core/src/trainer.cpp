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

#include "slung/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "slung/errors.hpp"

namespace slung {

namespace {

std::vector<const SequenceWindow*> slice_ptrs(const std::vector<SequenceWindow>& ws,
                                              const std::vector<std::size_t>& order,
                                              std::size_t begin, std::size_t end) {
  std::vector<const SequenceWindow*> out;
  out.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) out.push_back(&ws[order[i]]);
  return out;
}

void accumulate(LossTerms::Values& acc, const LossTerms::Values& v, double w) {
  acc.fit += w * v.fit;
  acc.physics += w * v.physics;
  acc.projection += w * v.projection;
  acc.slack += w * v.slack;
  acc.total += w * v.total;
}

std::string describe(const LossTerms::Values& v) {
  char buf[200];
  std::snprintf(buf, sizeof(buf), "fit %g, physics %g, projection %g, slack %g", v.fit, v.physics,
                v.projection, v.slack);
  return buf;
}

}  // namespace

TrainConfig TrainConfig::paper() {
  TrainConfig c;
  c.batch_size = 256;
  c.max_epochs = 3000;
  return c;
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("train config: lr must be > 0");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("train config: weight_decay must be >= 0");
  if (batch_size == 0) throw std::invalid_argument("train config: batch_size must be >= 1");
  if (patience == 0) throw std::invalid_argument("train config: patience must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(eps > 0.0)) {
    throw std::invalid_argument("train config: invalid Adam constants");
  }
  if (!(clip_norm >= 0.0) || !(max_seconds >= 0.0)) {
    throw std::invalid_argument("train config: clip_norm and max_seconds must be >= 0");
  }
}

AdamState make_adam_state(const ParameterStore& params) {
  AdamState s;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].trainable) continue;
    s.m.emplace_back(params[i].value.shape());
    s.v.emplace_back(params[i].value.shape());
  }
  return s;
}

void adam_step(ParameterStore& params, AdamState& state, const TrainConfig& cfg) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t), c2 = 1.0 - std::pow(cfg.beta2, t);
  std::size_t k = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    if (!p.trainable) continue;
    if (k >= state.m.size() || !p.grad.same_shape(p.value) || !state.m[k].same_shape(p.value) ||
        !state.v[k].same_shape(p.value)) {
      throw ShapeError("adam: state or gradient of '" + p.name + "' does not match " +
                       p.value.shape_string());
    }
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    ++k;
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      double g = p.grad[j];
      if (!cfg.decoupled_weight_decay) g += cfg.weight_decay * p.value[j];
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
      if (cfg.decoupled_weight_decay) p.value[j] -= cfg.lr * cfg.weight_decay * p.value[j];
      p.value[j] -= cfg.lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg.eps);
    }
  }
  if (k != state.m.size()) throw ShapeError("adam: state has extra entries");
}

double clip_gradients(ParameterStore& params, double max_norm) {
  double sq = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].trainable) continue;
    for (double g : params[i].grad.values()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!params[i].trainable) continue;
      for (double& g : params[i].grad.values()) g *= s;
    }
  }
  return norm;
}

LossTerms::Values evaluate_loss(const Seq2SeqModel& model, const std::vector<SequenceWindow>& windows,
                                const LossWeights& weights, const PhysicalParams& params,
                                std::size_t batch_size) {
  if (windows.empty()) throw DataError("evaluate_loss: no windows");
  const std::size_t horizon = model.config().horizon;
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  LossTerms::Values acc;
  for (std::size_t b = 0; b < windows.size(); b += batch_size) {
    const std::size_t e = std::min(windows.size(), b + batch_size);
    const WindowBatch batch = WindowBatch::from_windows(slice_ptrs(windows, order, b, e), horizon);
    Tape tape;
    const auto p = model.bind_constant(tape);
    const LossTerms t = total_loss(model.forward(p, batch, horizon), batch, params, weights);
    accumulate(acc, t.values(), static_cast<double>(e - b) / static_cast<double>(windows.size()));
  }
  return acc;
}

TrainResult train(Seq2SeqModel& model, const std::vector<SequenceWindow>& train_windows,
                  const std::vector<SequenceWindow>& validation_windows, const LossWeights& weights,
                  const PhysicalParams& params, const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  weights.validate();
  if (train_windows.empty()) throw DataError("train: empty training split");
  if (validation_windows.empty()) throw DataError("train: empty validation split");
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  const std::size_t horizon = model.config().horizon;
  const std::size_t eval_batch = std::max<std::size_t>(cfg.batch_size, 64);

  auto validate_epoch = [&](std::size_t epoch) {
    const LossTerms::Values v =
        hooks.validation_override
            ? hooks.validation_override(epoch)
            : evaluate_loss(model, validation_windows, weights, params, eval_batch);
    if (!std::isfinite(v.total)) {
      throw NumericError("train: validation loss is not finite at epoch " + std::to_string(epoch) +
                         " (" + describe(v) + ")");
    }
    return v;
  };
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

  TrainResult result;
  EpochRecord first;
  first.train = evaluate_loss(model, train_windows, weights, params, eval_batch);
  first.validation = validate_epoch(0);
  first.seconds = elapsed();
  result.history.push_back(first);
  if (hooks.on_epoch) hooks.on_epoch(first);
  result.best_epoch = 0;
  result.best_validation = first.validation.total;
  result.best_params = model.params();
  result.stop_reason = "max_epochs";

  AdamState adam = make_adam_state(model.params());
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train_windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(order.size(), b + cfg.batch_size);
      const WindowBatch batch =
          WindowBatch::from_windows(slice_ptrs(train_windows, order, b, e), horizon);
      model.params().zero_grad();
      LossTerms::Values v;
      {
        Tape tape;
        const auto p = model.bind(tape);
        const LossTerms terms = total_loss(model.forward(p, batch, horizon), batch, params, weights);
        v = terms.values();
        if (!std::isfinite(v.total)) {
          throw NumericError("train: loss is not finite at epoch " + std::to_string(epoch) + " (" +
                             describe(v) + ")");
        }
        tape.backward(terms.total);
      }
      if (cfg.clip_norm > 0.0) clip_gradients(model.params(), cfg.clip_norm);
      adam_step(model.params(), adam, cfg);
      accumulate(rec.train, v, static_cast<double>(e - b) / static_cast<double>(order.size()));
    }
    rec.validation = validate_epoch(epoch);
    rec.seconds = elapsed();
    result.history.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);

    if (rec.validation.total < result.best_validation) {
      result.best_validation = rec.validation.total;
      result.best_epoch = epoch;
      result.best_params = model.params();
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      result.stop_reason = "patience";
      break;
    }
    if (cfg.max_seconds > 0.0 && rec.seconds >= cfg.max_seconds) {
      result.stop_reason = "time_budget";
      break;
    }
  }
  result.final_params = model.params();
  model.params().assign_values(result.best_params);
  return result;
}

void write_training_log(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write training log " + path.string());
  out << "epoch,split,L_fit,L_physics,L_projection,L_slack,total\n";
  char buf[256];
  for (const EpochRecord& r : history) {
    for (const auto& [name, v] : {std::pair{"train", r.train}, std::pair{"validation", r.validation}}) {
      std::snprintf(buf, sizeof(buf), "%zu,%s,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epoch, name, v.fit,
                    v.physics, v.projection, v.slack, v.total);
      out << buf;
    }
  }
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kNoPhysics: return "no_physics";
    case Variant::kNoSlack: return "no_slack";
  }
  return "?";
}

Variant variant_from_name(const std::string& name) {
  for (Variant v : {Variant::kFull, Variant::kNoPhysics, Variant::kNoSlack}) {
    if (name == variant_name(v)) return v;
  }
  throw std::invalid_argument("unknown model variant '" + name + "'");
}

void apply_variant(Variant v, ModelConfig& model, LossWeights& weights) {
  switch (v) {
    case Variant::kFull:
      model.slack_head = true;
      break;
    case Variant::kNoPhysics:
      model.slack_head = false;
      weights.phi = 0.0;
      weights.rho = 0.0;
      break;
    case Variant::kNoSlack:
      model.slack_head = false;
      weights.rho = 0.0;
      break;
  }
}

}  // namespace slung

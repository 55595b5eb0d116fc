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

#include "slung/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>

#include "slung/errors.hpp"
#include "slung/so3.hpp"

namespace slung {
namespace {

using Json = nlohmann::ordered_json;

UnitQuat quat_at(const StateVector& x) {
  return {x[StateLayout::kQuat], x[StateLayout::kQuat + 1], x[StateLayout::kQuat + 2],
          x[StateLayout::kQuat + 3]};
}

double block_error(const StateVector& a, const StateVector& b, int offset) {
  return (a.segment<3>(offset) - b.segment<3>(offset)).norm();
}

std::array<double, 4> group_errors(const StateVector& pred, const StateVector& truth) {
  std::array<double, 4> e{};
  for (std::size_t g = 0; g < 4; ++g) e[g] = group_error(kStateGroups[g], pred, truth);
  return e;
}

// Linear interpolation between order statistics at position p (n - 1).
double quantile(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

MaeStats stats_of(std::vector<double> xs) {
  MaeStats s;
  double sum = 0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  double ss = 0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(xs.size()));
  std::sort(xs.begin(), xs.end());
  s.q1 = quantile(xs, 0.25);
  s.q3 = quantile(xs, 0.75);
  return s;
}

void check_shapes(const Predictions& pred, const Predictions& truth) {
  if (pred.empty()) throw ShapeError("metrics: no windows");
  if (pred.size() != truth.size()) {
    throw ShapeError("metrics: " + std::to_string(pred.size()) + " predictions for " +
                     std::to_string(truth.size()) + " truths");
  }
  const std::size_t n = pred.front().size();
  if (n == 0) throw ShapeError("metrics: empty horizon");
  for (std::size_t j = 0; j < pred.size(); ++j) {
    if (pred[j].size() != n || truth[j].size() != n) {
      throw ShapeError("metrics: horizon mismatch at window " + std::to_string(j));
    }
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw DataError("failed writing " + path.string());
}

Json rmse_json(const RmseReport& report) {
  Json models = Json::object();
  for (const auto& [name, r] : report.rows) {
    models[name] = {{"position", r.position},
                    {"velocity", r.velocity},
                    {"quaternion", r.quaternion},
                    {"payload", r.payload},
                    {"combined", r.combined}};
  }
  return models;
}

}  // namespace

const char* group_name(StateGroup g) {
  switch (g) {
    case StateGroup::kPosition: return "position";
    case StateGroup::kVelocity: return "velocity";
    case StateGroup::kQuaternion: return "quaternion";
    case StateGroup::kPayload: return "payload";
  }
  return "?";
}

double group_error(StateGroup g, const StateVector& prediction, const StateVector& truth) {
  switch (g) {
    case StateGroup::kPosition: return block_error(prediction, truth, StateLayout::kPosition);
    case StateGroup::kVelocity: return block_error(prediction, truth, StateLayout::kVelocity);
    case StateGroup::kPayload: return block_error(prediction, truth, StateLayout::kLoadPosition);
    case StateGroup::kQuaternion: {
      const UnitQuat q = quat_at(prediction);
      if (!(q.norm() > 0.0)) throw NumericError("metrics: zero predicted quaternion");
      return quat_error(q.normalized(), quat_at(truth)).norm();
    }
  }
  return 0.0;
}

double combined_error(const StateVector& prediction, const StateVector& truth) {
  double s = 0;
  for (double e : group_errors(prediction, truth)) s += e * e;
  return std::sqrt(s);
}

Predictions truths_of(const std::vector<SequenceWindow>& windows, std::size_t horizon) {
  Predictions out;
  out.reserve(windows.size());
  for (const SequenceWindow& w : windows) {
    if (w.horizon() < horizon) {
      throw ShapeError("window " + w.log_id + "@" + std::to_string(w.start) + " has " +
                       std::to_string(w.horizon()) + " future states, need " +
                       std::to_string(horizon));
    }
    out.emplace_back(w.future_states.begin(), w.future_states.begin() + horizon);
  }
  return out;
}

MaeCurve mae_curve(const Predictions& predictions, const Predictions& truths) {
  check_shapes(predictions, truths);
  const std::size_t n = predictions.front().size(), count = predictions.size();
  MaeCurve curve;
  for (auto& g : curve.groups) g.resize(n);
  curve.combined.resize(n);
  std::array<std::vector<double>, 5> col;
  for (auto& c : col) c.resize(count);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < count; ++j) {
      const auto e = group_errors(predictions[j][k], truths[j][k]);
      double s = 0;
      for (std::size_t g = 0; g < 4; ++g) {
        col[g][j] = e[g];
        s += e[g] * e[g];
      }
      col[4][j] = std::sqrt(s);
    }
    for (std::size_t g = 0; g < 4; ++g) curve.groups[g][k] = stats_of(col[g]);
    curve.combined[k] = stats_of(col[4]);
  }
  return curve;
}

RmseRow rmse(const Predictions& predictions, const Predictions& truths) {
  check_shapes(predictions, truths);
  std::array<double, 4> mse{};
  std::size_t terms = 0;
  for (std::size_t j = 0; j < predictions.size(); ++j) {
    for (std::size_t k = 0; k < predictions[j].size(); ++k, ++terms) {
      const auto e = group_errors(predictions[j][k], truths[j][k]);
      for (std::size_t g = 0; g < 4; ++g) mse[g] += e[g] * e[g];
    }
  }
  for (double& m : mse) m /= static_cast<double>(terms);
  RmseRow r;
  r.position = std::sqrt(mse[0]);
  r.velocity = std::sqrt(mse[1]);
  r.quaternion = std::sqrt(mse[2]);
  r.payload = std::sqrt(mse[3]);
  r.combined = std::sqrt(mse[0] + mse[1] + mse[2] + mse[3]);
  return r;
}

const RmseRow* RmseReport::find(const std::string& name) const {
  for (const auto& [n, r] : rows) {
    if (n == name) return &r;
  }
  return nullptr;
}

RmseReport rmse_report(const std::vector<NamedPredictions>& models, const Predictions& truths) {
  RmseReport report;
  report.horizon = truths.empty() ? 0 : truths.front().size();
  for (const NamedPredictions& m : models) {
    if (!m.predictions) {
      warn("rmse report: model '" + m.name + "' unavailable, row omitted");
      continue;
    }
    report.rows.emplace_back(m.name, rmse(*m.predictions, truths));
  }
  return report;
}

Predictions physics_predictions(const std::vector<SequenceWindow>& windows, std::size_t horizon,
                                const PhysicalParams& params) {
  Predictions out;
  out.reserve(windows.size());
  for (const SequenceWindow& w : windows) {
    if (w.history_states.empty() || w.future_controls.size() + 1 < horizon) {
      throw ShapeError("physics baseline: window " + w.log_id + "@" + std::to_string(w.start) +
                       " cannot cover horizon " + std::to_string(horizon));
    }
    std::vector<StateVector> traj;
    traj.reserve(horizon);
    SystemState x = SystemState::from_vector(w.history_states.back());
    Vec3 omega = w.omega_load;
    for (std::size_t n = 0; n < horizon; ++n) {
      try {
        const StepResult r = step(x, omega, ControlInput::from_vector(w.step_control(n)), params);
        x = r.state;
        omega = r.omega_load;
      } catch (const DegenerateStateError&) {
        warn("physics baseline: degenerate cable in window " + w.log_id + "@" +
             std::to_string(w.start) + " at step " + std::to_string(n) + ", holding state");
        traj.resize(horizon, traj.empty() ? w.history_states.back() : traj.back());
        break;
      }
      traj.push_back(x.to_vector());
    }
    out.push_back(std::move(traj));
  }
  return out;
}

Predictions model_predictions(const Seq2SeqModel& model, const std::vector<SequenceWindow>& windows,
                              std::size_t horizon, std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("model_predictions: batch_size must be >= 1");
  Predictions out;
  out.reserve(windows.size());
  std::vector<const SequenceWindow*> ptrs;
  for (std::size_t b = 0; b < windows.size(); b += batch_size) {
    ptrs.clear();
    for (std::size_t j = b; j < std::min(windows.size(), b + batch_size); ++j) ptrs.push_back(&windows[j]);
    for (PredictionOutput& p : model.predict_batch(ptrs, horizon)) out.push_back(std::move(p.states));
  }
  return out;
}

std::optional<std::size_t> crossing_index(const MaeCurve& model, const MaeCurve& baseline) {
  if (model.horizon() != baseline.horizon()) throw ShapeError("crossing_index: horizon mismatch");
  for (std::size_t k = 0; k < model.horizon(); ++k) {
    if (model.combined[k].mean < baseline.combined[k].mean) return k + 1;
  }
  return std::nullopt;
}

void write_mae_csv(const std::filesystem::path& path, const MaeCurve& curve) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "k,group,mean,std,q1,q3\n";
  auto row = [&](std::size_t k, const char* name, const MaeStats& s) {
    out << k + 1 << ',' << name << ',' << fmt(s.mean) << ',' << fmt(s.std) << ',' << fmt(s.q1)
        << ',' << fmt(s.q3) << '\n';
  };
  for (std::size_t k = 0; k < curve.horizon(); ++k) {
    for (StateGroup g : kStateGroups) row(k, group_name(g), curve.group(g)[k]);
    row(k, "combined", curve.combined[k]);
  }
  if (!out) throw DataError("failed writing " + path.string());
}

void write_rmse_json(const std::filesystem::path& path, const RmseReport& report,
                     const std::string& manifest) {
  Json j;
  j["manifest"] = manifest;
  j["horizon"] = report.horizon;
  j["combined_definition"] = "sqrt(sum of group mean squared errors)";
  j["models"] = rmse_json(report);
  write_json(path, j);
}

ComparisonSummary compare_predictors(const std::vector<NamedPredictions>& models,
                                     const Predictions& truths, const std::string& baseline,
                                     const std::filesystem::path& out_dir,
                                     const std::string& manifest) {
  ComparisonSummary s;
  s.horizon = truths.empty() ? 0 : truths.front().size();
  s.rmse = rmse_report(models, truths);
  for (const NamedPredictions& m : models) {
    if (m.predictions) s.curves.emplace_back(m.name, mae_curve(*m.predictions, truths));
  }
  const MaeCurve* base = nullptr;
  for (const auto& [name, c] : s.curves) {
    if (name == baseline) base = &c;
  }
  if (base == nullptr) throw DataError("compare: baseline '" + baseline + "' unavailable");
  for (const auto& [name, c] : s.curves) {
    if (name != baseline) s.crossings.emplace_back(name, crossing_index(c, *base));
  }

  std::filesystem::create_directories(out_dir);
  for (const auto& [name, c] : s.curves) write_mae_csv(out_dir / ("mae_" + name + ".csv"), c);
  write_rmse_json(out_dir / "rmse.json", s.rmse, manifest);
  Json j;
  j["manifest"] = manifest;
  j["horizon"] = s.horizon;
  j["windows"] = truths.size();
  j["baseline"] = baseline;
  j["crossing_index"] = Json::object();
  for (const auto& [name, k] : s.crossings) {
    j["crossing_index"][name] = k ? Json(*k) : Json(nullptr);
  }
  j["rmse"] = rmse_json(s.rmse);
  write_json(out_dir / "comparison.json", j);
  return s;
}

}  // namespace slung

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

#include "slung/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <nlohmann/json.hpp>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "slung/checkpoint.hpp"
#include "slung/errors.hpp"

namespace slung {
namespace {

using Json = nlohmann::ordered_json;

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

void check_keys(const Json& j, const std::string& block, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw DataError("config: '" + block + "' must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) throw DataError("config: unknown key '" + block + "." + key + "'");
  }
}

template <typename T>
void take(const Json& j, const char* key, T& field, const std::string& block) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw DataError("config: bad value for '" + block + "." + key + "'");
  }
}

void take_vec3(const Json& j, const char* key, Vec3& v, const std::string& block) {
  if (!j.contains(key)) return;
  std::array<double, 3> a{};
  take(j, key, a, block);
  v = Vec3(a[0], a[1], a[2]);
}

void apply_model(const Json& j, ModelConfig& m) {
  check_keys(j, "model", {"latent_dim", "hidden_dim", "num_layers", "attention_dim", "history",
                          "horizon", "slack_head"});
  take(j, "latent_dim", m.latent_dim, "model");
  take(j, "hidden_dim", m.hidden_dim, "model");
  take(j, "num_layers", m.num_layers, "model");
  take(j, "attention_dim", m.attention_dim, "model");
  take(j, "history", m.history, "model");
  take(j, "horizon", m.horizon, "model");
  take(j, "slack_head", m.slack_head, "model");
}

void apply_train(const Json& j, TrainConfig& t) {
  check_keys(j, "train", {"lr", "weight_decay", "decoupled_weight_decay", "batch_size",
                          "max_epochs", "patience", "beta1", "beta2", "eps", "clip_norm",
                          "max_seconds"});
  take(j, "lr", t.lr, "train");
  take(j, "weight_decay", t.weight_decay, "train");
  take(j, "decoupled_weight_decay", t.decoupled_weight_decay, "train");
  take(j, "batch_size", t.batch_size, "train");
  take(j, "max_epochs", t.max_epochs, "train");
  take(j, "patience", t.patience, "train");
  take(j, "beta1", t.beta1, "train");
  take(j, "beta2", t.beta2, "train");
  take(j, "eps", t.eps, "train");
  take(j, "clip_norm", t.clip_norm, "train");
  take(j, "max_seconds", t.max_seconds, "train");
}

void apply_loss(const Json& j, LossWeights& w) {
  check_keys(j, "loss", {"lambda", "phi", "psi", "rho", "alpha", "beta"});
  take(j, "lambda", w.lambda, "loss");
  take(j, "phi", w.phi, "loss");
  take(j, "psi", w.psi, "loss");
  take(j, "rho", w.rho, "loss");
  take(j, "alpha", w.alpha, "loss");
  take(j, "beta", w.beta, "loss");
}

void apply_physics(const Json& j, PhysicalParams& p) {
  check_keys(j, "physics", {"m_vehicle", "m_load", "cable_length", "damping", "gravity", "dt",
                            "taut_tolerance"});
  take(j, "m_vehicle", p.m_vehicle, "physics");
  take(j, "m_load", p.m_load, "physics");
  take(j, "cable_length", p.cable_length, "physics");
  take(j, "damping", p.damping, "physics");
  take(j, "gravity", p.gravity, "physics");
  take(j, "dt", p.dt, "physics");
  take(j, "taut_tolerance", p.taut_tolerance, "physics");
}

void apply_data(const Json& j, DataConfig& d) {
  check_keys(j, "data", {"seed", "logs", "min_length", "max_length", "stride", "fractions",
                         "trajectories", "disturbance", "controller"});
  take(j, "seed", d.seed, "data");
  take(j, "logs", d.logs, "data");
  take(j, "min_length", d.min_length, "data");
  take(j, "max_length", d.max_length, "data");
  take(j, "stride", d.stride, "data");
  take(j, "fractions", d.fractions, "data");
  if (j.contains("trajectories")) {
    std::vector<std::string> names;
    take(j, "trajectories", names, "data");
    d.trajectories.clear();
    try {
      for (const std::string& n : names) d.trajectories.push_back(trajectory_from_name(n));
    } catch (const std::invalid_argument& e) {
      throw DataError(std::string("config: ") + e.what());
    }
  }
  if (j.contains("disturbance")) {
    const Json& b = j.at("disturbance");
    check_keys(b, "data.disturbance", {"drag_vehicle", "drag_load", "wind", "sigma_position",
                                       "sigma_velocity", "sigma_quat"});
    DisturbanceConfig& c = d.disturbance;
    take(b, "drag_vehicle", c.drag_vehicle, "data.disturbance");
    take(b, "drag_load", c.drag_load, "data.disturbance");
    take_vec3(b, "wind", c.wind, "data.disturbance");
    take(b, "sigma_position", c.sigma_position, "data.disturbance");
    take(b, "sigma_velocity", c.sigma_velocity, "data.disturbance");
    take(b, "sigma_quat", c.sigma_quat, "data.disturbance");
  }
  if (j.contains("controller")) {
    const Json& b = j.at("controller");
    check_keys(b, "data.controller", {"kp", "kd", "kr", "kw", "rate_limit"});
    ControllerGains& g = d.controller;
    take(b, "kp", g.kp, "data.controller");
    take(b, "kd", g.kd, "data.controller");
    take(b, "kr", g.kr, "data.controller");
    take(b, "kw", g.kw, "data.controller");
    take(b, "rate_limit", g.rate_limit, "data.controller");
  }
}

Json config_to_json(const RunConfig& c) {
  Json j;
  j["profile"] = c.profile;
  j["seed"] = c.seed;
  j["variant"] = variant_name(c.variant);
  const ModelConfig& m = c.model;
  j["model"] = {{"latent_dim", m.latent_dim},   {"hidden_dim", m.hidden_dim},
                {"num_layers", m.num_layers},   {"attention_dim", m.attention_dim},
                {"history", m.history},         {"horizon", m.horizon},
                {"slack_head", m.slack_head}};
  const TrainConfig& t = c.train;
  j["train"] = {{"lr", t.lr},
                {"weight_decay", t.weight_decay},
                {"decoupled_weight_decay", t.decoupled_weight_decay},
                {"batch_size", t.batch_size},
                {"max_epochs", t.max_epochs},
                {"patience", t.patience},
                {"beta1", t.beta1},
                {"beta2", t.beta2},
                {"eps", t.eps},
                {"clip_norm", t.clip_norm},
                {"max_seconds", t.max_seconds}};
  const LossWeights& w = c.loss;
  j["loss"] = {{"lambda", w.lambda}, {"phi", w.phi},     {"psi", w.psi},
               {"rho", w.rho},       {"alpha", w.alpha}, {"beta", w.beta}};
  const PhysicalParams& p = c.physics;
  j["physics"] = {{"m_vehicle", p.m_vehicle}, {"m_load", p.m_load},
                  {"cable_length", p.cable_length}, {"damping", p.damping},
                  {"gravity", p.gravity},     {"dt", p.dt},
                  {"taut_tolerance", p.taut_tolerance}};
  const DataConfig& d = c.data;
  Json traj = Json::array();
  for (Trajectory t : d.trajectories) traj.push_back(trajectory_name(t));
  const DisturbanceConfig& dc = d.disturbance;
  const ControllerGains& g = d.controller;
  j["data"] = {{"seed", d.seed},
               {"logs", d.logs},
               {"min_length", d.min_length},
               {"max_length", d.max_length},
               {"stride", d.stride},
               {"fractions", d.fractions},
               {"trajectories", traj},
               {"disturbance",
                {{"drag_vehicle", dc.drag_vehicle},
                 {"drag_load", dc.drag_load},
                 {"wind", std::array<double, 3>{dc.wind.x(), dc.wind.y(), dc.wind.z()}},
                 {"sigma_position", dc.sigma_position},
                 {"sigma_velocity", dc.sigma_velocity},
                 {"sigma_quat", dc.sigma_quat}}},
               {"controller",
                {{"kp", g.kp}, {"kd", g.kd}, {"kr", g.kr}, {"kw", g.kw}, {"rate_limit", g.rate_limit}}}};
  return j;
}

std::uint64_t log_seed(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);
  return rng() >> 16;
}

std::vector<SequenceWindow> windows_of(const std::vector<FlightLog>& logs, std::size_t m,
                                       std::size_t n, std::size_t stride,
                                       const PhysicalParams& params) {
  std::vector<SequenceWindow> out;
  for (const FlightLog& log : logs) {
    std::vector<SequenceWindow> w = make_windows(log, m, n, stride, params);
    std::move(w.begin(), w.end(), std::back_inserter(out));
  }
  return out;
}

}  // namespace

RunConfig RunConfig::desk() { return {}; }

RunConfig RunConfig::paper() {
  RunConfig c;
  c.profile = "paper";
  c.model = ModelConfig::paper();
  c.train = TrainConfig::paper();
  c.data.logs = 48;
  return c;
}

RunConfig RunConfig::profile_named(const std::string& name) {
  if (name == "desk") return desk();
  if (name == "paper") return paper();
  throw std::invalid_argument("unknown profile '" + name + "' (desk|paper)");
}

void RunConfig::validate() const {
  model.validate();
  train.validate();
  loss.validate();
  physics.validate();
  if (data.logs < 3) throw std::invalid_argument("data: at least 3 logs are needed");
  if (data.min_length == 0 || data.min_length > data.max_length) {
    throw std::invalid_argument("data: need 0 < min_length <= max_length");
  }
  if (data.stride == 0) throw std::invalid_argument("data: stride must be >= 1");
  if (data.trajectories.empty()) throw std::invalid_argument("data: no trajectories");
}

RunConfig parse_run_config(const std::string& json_text, const RunConfig& base) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  check_keys(j, "config", {"profile", "seed", "variant", "model", "train", "loss", "physics", "data"});
  RunConfig c = base;
  if (j.contains("profile")) {
    std::string name;
    take(j, "profile", name, "config");
    try {
      c = RunConfig::profile_named(name);
    } catch (const std::invalid_argument& e) {
      throw DataError(std::string("config: ") + e.what());
    }
  }
  take(j, "seed", c.seed, "config");
  if (j.contains("variant")) {
    std::string name;
    take(j, "variant", name, "config");
    try {
      c.variant = variant_from_name(name);
    } catch (const std::invalid_argument& e) {
      throw DataError(std::string("config: ") + e.what());
    }
  }
  if (j.contains("model")) apply_model(j.at("model"), c.model);
  if (j.contains("train")) apply_train(j.at("train"), c.train);
  if (j.contains("loss")) apply_loss(j.at("loss"), c.loss);
  if (j.contains("physics")) apply_physics(j.at("physics"), c.physics);
  if (j.contains("data")) apply_data(j.at("data"), c.data);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, const RunConfig& base) {
  return parse_run_config(read_text(path), base);
}

std::string run_config_json(const RunConfig& config) { return config_to_json(config).dump(2); }

std::filesystem::path generate_dataset(const RunConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  const DataConfig& d = config.data;
  std::filesystem::create_directories(out_dir / "logs");
  std::mt19937_64 rng(d.seed);
  std::uniform_int_distribution<std::size_t> length(d.min_length, d.max_length);

  DatasetManifest manifest;
  manifest.history = config.model.history;
  manifest.horizon = config.model.horizon;
  manifest.stride = d.stride;
  manifest.dt = config.physics.dt;
  manifest.seed = d.seed;
  std::vector<std::size_t> counts;
  for (std::size_t i = 0; i < d.logs; ++i) {
    const std::size_t len = length(rng);
    const Trajectory t = d.trajectories[i % d.trajectories.size()];
    FlightLog log = generate_synthetic(config.physics, d.disturbance, t, len, log_seed(d.seed, i),
                                       d.controller);
    const std::string file = "logs/" + log.id + ".csv";
    write_log(out_dir / file, log);
    manifest.logs.push_back({file, log.id, log.size(), Split::kTrain});
    counts.push_back(window_count(log.size(), manifest.history, manifest.horizon, d.stride));
  }
  const SplitAssignment s = assign_splits(counts, d.fractions, d.seed);
  for (std::size_t i = 0; i < manifest.logs.size(); ++i) manifest.logs[i].split = s.assignment[i];
  manifest.windows = s.windows;
  manifest.achieved = s.achieved;
  const std::filesystem::path path = out_dir / "dataset.json";
  manifest.save(path);
  return path;
}

std::vector<SequenceWindow> split_windows(const DatasetManifest& manifest,
                                          const std::filesystem::path& base_dir, Split split,
                                          std::size_t history, std::size_t horizon,
                                          std::size_t stride, const PhysicalParams& params) {
  return windows_of(load_split(manifest, base_dir, split), history, horizon, stride, params);
}

void RunManifest::save(const std::filesystem::path& path) const {
  Json j;
  j["format"] = "slung-run";
  j["version"] = 1;
  j["variant"] = variant;
  j["seed"] = seed;
  j["dataset"] = dataset;
  j["dataset_hash"] = dataset_hash;
  j["parameter_count"] = parameter_count;
  j["windows"] = {{"train", train_windows}, {"validation", validation_windows}};
  j["best_epoch"] = best_epoch;
  j["epochs"] = epochs;
  j["best_validation"] = best_validation;
  j["stop_reason"] = stop_reason;
  j["checkpoint"] = checkpoint;
  j["final_checkpoint"] = final_checkpoint;
  j["training_log"] = training_log;
  j["config"] = Json::parse(config_json);
  write_text(path, j.dump(2) + "\n");
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
  RunManifest m;
  try {
    const Json j = Json::parse(read_text(path));
    if (j.value("format", "") != "slung-run") throw DataError(path.string() + ": not a run manifest");
    m.variant = j.at("variant").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.dataset = j.at("dataset").get<std::string>();
    m.dataset_hash = j.at("dataset_hash").get<std::string>();
    m.parameter_count = j.at("parameter_count").get<std::size_t>();
    m.train_windows = j.at("windows").at("train").get<std::size_t>();
    m.validation_windows = j.at("windows").at("validation").get<std::size_t>();
    m.best_epoch = j.at("best_epoch").get<std::size_t>();
    m.epochs = j.at("epochs").get<std::size_t>();
    m.best_validation = j.at("best_validation").get<double>();
    m.stop_reason = j.at("stop_reason").get<std::string>();
    m.checkpoint = j.at("checkpoint").get<std::string>();
    m.final_checkpoint = j.at("final_checkpoint").get<std::string>();
    m.training_log = j.at("training_log").get<std::string>();
    m.config_json = j.at("config").dump(2);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return m;
}

TrainedRun train_run(const RunConfig& config, const std::filesystem::path& dataset_manifest,
                     const std::filesystem::path& out_dir, const TrainHooks& hooks) {
  RunConfig eff = config;
  apply_variant(eff.variant, eff.model, eff.loss);
  eff.train.seed = eff.seed;
  eff.validate();

  const DatasetManifest ds = DatasetManifest::load(dataset_manifest);
  const std::filesystem::path base = dataset_manifest.parent_path();
  const std::vector<FlightLog> train_logs = load_split(ds, base, Split::kTrain);
  const std::vector<FlightLog> val_logs = load_split(ds, base, Split::kValidation);
  if (train_logs.empty()) throw DataError("dataset has no training logs");
  if (val_logs.empty()) throw DataError("dataset has no validation logs");
  const std::size_t m = eff.model.history, n = eff.model.horizon;
  const auto train_w = windows_of(train_logs, m, n, eff.data.stride, eff.physics);
  const auto val_w = windows_of(val_logs, m, n, eff.data.stride, eff.physics);

  std::vector<const FlightLog*> ptrs;
  for (const FlightLog& l : train_logs) ptrs.push_back(&l);
  Seq2SeqModel model(eff.model, eff.seed);
  model.set_normalization(compute_normalization(ptrs));

  TrainedRun run;
  run.result = train(model, train_w, val_w, eff.loss, eff.physics, eff.train, hooks);

  std::filesystem::create_directories(out_dir);
  RunManifest& rm = run.manifest;
  rm.config_json = run_config_json(eff);
  rm.variant = variant_name(eff.variant);
  rm.seed = eff.seed;
  rm.dataset = dataset_manifest.string();
  rm.dataset_hash = dataset_hash(ds, base);
  rm.parameter_count = model.parameter_count();
  rm.train_windows = train_w.size();
  rm.validation_windows = val_w.size();
  rm.best_epoch = run.result.best_epoch;
  rm.epochs = run.result.history.empty() ? 0 : run.result.history.back().epoch;
  rm.best_validation = run.result.best_validation;
  rm.stop_reason = run.result.stop_reason;
  save_checkpoint(out_dir / rm.checkpoint, model.params());
  save_checkpoint(out_dir / rm.final_checkpoint, run.result.final_params);
  write_training_log(out_dir / rm.training_log, run.result.history);
  run.manifest_path = out_dir / "run.json";
  rm.save(run.manifest_path);
  return run;
}

Seq2SeqModel load_run_model(const std::filesystem::path& run_manifest, RunConfig* config) {
  const RunManifest rm = RunManifest::load(run_manifest);
  const RunConfig cfg = parse_run_config(rm.config_json, RunConfig::desk());
  Seq2SeqModel model(cfg.model, cfg.seed);
  restore_checkpoint(run_manifest.parent_path() / rm.checkpoint, model.params());
  if (config != nullptr) *config = cfg;
  return model;
}

ComparisonSummary evaluate_runs(const EvaluationSpec& spec, const std::filesystem::path& out_dir) {
  const DatasetManifest ds = DatasetManifest::load(spec.dataset);
  const std::filesystem::path base = spec.dataset.parent_path();
  const std::vector<FlightLog> test_logs = load_split(ds, base, Split::kTest);
  if (test_logs.empty()) throw DataError(spec.dataset.string() + ": dataset has no test split");
  const std::size_t stride = spec.stride == 0 ? ds.stride : spec.stride;
  const auto windows = windows_of(test_logs, ds.history, spec.horizon, stride, spec.physics);
  if (windows.empty()) {
    throw DataError("test logs are too short for history " + std::to_string(ds.history) +
                    " and horizon " + std::to_string(spec.horizon));
  }

  Json prov;
  prov["dataset"] = spec.dataset.string();
  prov["dataset_hash"] = dataset_hash(ds, base);
  prov["horizon"] = spec.horizon;
  prov["stride"] = stride;
  prov["windows"] = windows.size();
  prov["runs"] = Json::object();

  std::vector<NamedPredictions> models;
  models.push_back({"physics", physics_predictions(windows, spec.horizon, spec.physics)});
  for (const auto& [name, path] : spec.runs) {
    if (!path || !std::filesystem::exists(*path)) {
      prov["runs"][name] = nullptr;
      models.push_back({name, std::nullopt});
      continue;
    }
    const Seq2SeqModel model = load_run_model(*path);
    if (model.config().history != ds.history) {
      throw DataError("run " + path->string() + " expects history " +
                      std::to_string(model.config().history) + ", dataset has " +
                      std::to_string(ds.history));
    }
    prov["runs"][name] = path->string();
    models.push_back({name, model_predictions(model, windows, spec.horizon)});
  }

  std::filesystem::create_directories(out_dir);
  const std::filesystem::path prov_path = out_dir / "evaluation.json";
  write_text(prov_path, prov.dump(2) + "\n");
  return compare_predictors(models, truths_of(windows, spec.horizon), "physics", out_dir,
                            prov_path.string());
}

SequenceWindow window_at(const FlightLog& log, std::size_t start, std::size_t history,
                         std::size_t horizon, const PhysicalParams& params) {
  const std::size_t need = history + horizon;
  if (start + need > log.size()) {
    throw DataError("log " + log.id + " has " + std::to_string(log.size()) + " rows; window at " +
                    std::to_string(start) + " needs " + std::to_string(start + need));
  }
  FlightLog slice;
  slice.id = log.id;
  slice.dt = log.dt;
  const auto b = static_cast<std::ptrdiff_t>(start), e = static_cast<std::ptrdiff_t>(start + need);
  slice.t.assign(log.t.begin() + b, log.t.begin() + e);
  slice.states.assign(log.states.begin() + b, log.states.begin() + e);
  slice.controls.assign(log.controls.begin() + b, log.controls.begin() + e);
  if (log.has_omega_load()) slice.omega_load.assign(log.omega_load.begin() + b, log.omega_load.begin() + e);
  std::vector<SequenceWindow> w = make_windows(slice, history, horizon, 1, params);
  w.front().start = start;
  return w.front();
}

}  // namespace slung

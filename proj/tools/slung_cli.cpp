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

// slung: generate | train | eval | predict | compare
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numeric divergence.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "slung/datakit.hpp"
#include "slung/errors.hpp"
#include "slung/evalkit.hpp"
#include "slung/pipeline.hpp"
#include "slung/so3.hpp"

namespace fs = std::filesystem;
using namespace slung;

namespace {

struct Common {
  std::string config;
  std::string profile = "desk";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> horizon;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool with_horizon) {
  cmd->add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--profile", c.profile, "Base profile")->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--seed", c.seed, "Random seed");
  if (with_horizon) cmd->add_option("--horizon", c.horizon, "Prediction horizon")->check(CLI::PositiveNumber);
}

RunConfig resolve(const Common& c) {
  const RunConfig base = RunConfig::profile_named(c.profile);
  if (c.config.empty()) return base;
  try {
    RunConfig cfg = load_run_config(c.config, base);
    cfg.validate();
    return cfg;
  } catch (const DataError& e) {
    throw std::invalid_argument(e.what());  // a bad config is a usage error
  }
}

void print_rmse(const ComparisonSummary& s) {
  std::printf("%-12s %10s %10s %10s %10s %10s\n", "model", "position", "velocity", "quaternion",
              "payload", "combined");
  for (const auto& [name, r] : s.rmse.rows) {
    std::printf("%-12s %10.4f %10.4f %10.4f %10.4f %10.4f\n", name.c_str(), r.position, r.velocity,
                r.quaternion, r.payload, r.combined);
  }
  for (const auto& [name, k] : s.crossings) {
    if (k) {
      std::printf("crossing %s vs physics: k = %zu\n", name.c_str(), *k);
    } else {
      std::printf("crossing %s vs physics: none\n", name.c_str());
    }
  }
}

TrainHooks progress_hooks() {
  TrainHooks h;
  h.on_epoch = [](const EpochRecord& e) {
    std::fprintf(stderr, "epoch %4zu  train %.6g  validation %.6g  (%.1f s)\n", e.epoch,
                 e.train.total, e.validation.total, e.seconds);
  };
  return h;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-informed slung-load dynamics prediction"};
  app.require_subcommand(1);

  Common gen_c;
  auto* gen = app.add_subcommand("generate", "Write synthetic flight logs and a dataset manifest");
  add_common(gen, gen_c, false);
  gen->add_option("--out", gen_c.out, "Output directory")->required();

  Common tr_c;
  std::string tr_data, tr_variant;
  auto* tr = app.add_subcommand("train", "Train a model on a dataset manifest");
  add_common(tr, tr_c, true);
  tr->add_option("--data", tr_data, "Dataset manifest")->required()->check(CLI::ExistingFile);
  tr->add_option("--variant", tr_variant, "full | no_physics | no_slack")
      ->check(CLI::IsMember({"full", "no_physics", "no_slack"}));
  tr->add_option("--out", tr_c.out, "Run directory")->required();

  Common ev_c;
  std::string ev_run, ev_data;
  std::size_t ev_stride = 0;
  auto* ev = app.add_subcommand("eval", "Compare a trained run with the physics baseline");
  add_common(ev, ev_c, true);
  ev->add_option("--run", ev_run, "Run manifest (run.json)")->required()->check(CLI::ExistingFile);
  ev->add_option("--data", ev_data, "Dataset manifest (default: the run's)");
  ev->add_option("--stride", ev_stride, "Window stride on the test split (default: dataset)");
  ev->add_option("--out", ev_c.out, "Report directory")->required();

  Common pr_c;
  std::string pr_run, pr_log;
  std::size_t pr_start = 0;
  bool pr_physics = false;
  auto* pr = app.add_subcommand("predict", "Predict one window of a log");
  add_common(pr, pr_c, true);
  pr->add_option("--run", pr_run, "Run manifest (run.json)")->required()->check(CLI::ExistingFile);
  pr->add_option("--log", pr_log, "Flight log CSV")->required()->check(CLI::ExistingFile);
  pr->add_option("--start", pr_start, "First history row");
  pr->add_flag("--physics", pr_physics, "Print the physics rollout instead of the model");
  pr->add_option("--out", pr_c.out, "Output CSV (default: stdout)");

  Common cm_c;
  std::string cm_data, cm_full, cm_nophys, cm_noslack;
  std::size_t cm_stride = 0;
  auto* cm = app.add_subcommand("compare", "Physics baseline against the ablation runs");
  add_common(cm, cm_c, true);
  cm->add_option("--data", cm_data, "Dataset manifest")->required()->check(CLI::ExistingFile);
  cm->add_option("--full", cm_full, "Run manifest of the full model");
  cm->add_option("--no-physics", cm_nophys, "Run manifest of the no-physics model");
  cm->add_option("--no-slack", cm_noslack, "Run manifest of the no-slack model");
  cm->add_option("--stride", cm_stride, "Window stride on the test split (default: dataset)");
  cm->add_option("--out", cm_c.out, "Report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      RunConfig cfg = resolve(gen_c);
      if (gen_c.seed) cfg.data.seed = *gen_c.seed;
      const fs::path manifest = generate_dataset(cfg, gen_c.out);
      const DatasetManifest m = DatasetManifest::load(manifest);
      std::printf("wrote %zu logs, manifest %s\n", m.logs.size(), manifest.string().c_str());
      std::printf("windows train %zu validation %zu test %zu (%.3f / %.3f / %.3f)\n", m.windows[0],
                  m.windows[1], m.windows[2], m.achieved[0], m.achieved[1], m.achieved[2]);
    } else if (tr->parsed()) {
      RunConfig cfg = resolve(tr_c);
      if (tr_c.seed) cfg.seed = *tr_c.seed;
      if (tr_c.horizon) cfg.model.horizon = *tr_c.horizon;
      if (!tr_variant.empty()) cfg.variant = variant_from_name(tr_variant);
      const TrainedRun run = train_run(cfg, tr_data, tr_c.out, progress_hooks());
      std::printf("best epoch %zu, validation %.6g, stopped: %s\n", run.manifest.best_epoch,
                  run.manifest.best_validation, run.manifest.stop_reason.c_str());
      std::printf("run manifest %s\n", run.manifest_path.string().c_str());
    } else if (ev->parsed()) {
      RunConfig cfg;
      (void)load_run_model(ev_run, &cfg);
      EvaluationSpec spec;
      spec.dataset = ev_data.empty() ? fs::path(RunManifest::load(ev_run).dataset) : fs::path(ev_data);
      spec.runs = {{variant_name(cfg.variant), fs::path(ev_run)}};
      spec.horizon = ev_c.horizon.value_or(2 * cfg.model.horizon);
      spec.stride = ev_stride;
      spec.physics = cfg.physics;
      print_rmse(evaluate_runs(spec, ev_c.out));
    } else if (pr->parsed()) {
      RunConfig cfg;
      const Seq2SeqModel model = load_run_model(pr_run, &cfg);
      const std::size_t horizon = pr_c.horizon.value_or(cfg.model.horizon);
      const FlightLog log = load_log(pr_log);
      const SequenceWindow w = window_at(log, pr_start, cfg.model.history, horizon, cfg.physics);
      const std::vector<SequenceWindow> one{w};
      const Predictions p = pr_physics ? physics_predictions(one, horizon, cfg.physics)
                                       : model_predictions(model, one, horizon);
      std::FILE* out = stdout;
      if (!pr_c.out.empty()) {
        out = std::fopen(pr_c.out.c_str(), "w");
        if (out == nullptr) throw DataError("cannot write " + pr_c.out);
      }
      std::fprintf(out, "k,px,py,pz,vx,vy,vz,qw,qx,qy,qz,plx,ply,plz\n");
      for (std::size_t k = 0; k < p.front().size(); ++k) {
        StateVector x = p.front()[k];
        x.segment<4>(StateLayout::kQuat).normalize();
        std::fprintf(out, "%zu", k + 1);
        for (int j = 0; j < kStateDim; ++j) std::fprintf(out, ",%.9g", x[j]);
        std::fprintf(out, "\n");
      }
      if (out != stdout) std::fclose(out);
    } else if (cm->parsed()) {
      const RunConfig cfg = resolve(cm_c);
      EvaluationSpec spec;
      spec.dataset = cm_data;
      auto opt = [](const std::string& s) {
        return s.empty() ? std::nullopt : std::optional<fs::path>(s);
      };
      spec.runs = {{"full", opt(cm_full)}, {"no_physics", opt(cm_nophys)}, {"no_slack", opt(cm_noslack)}};
      spec.horizon = cm_c.horizon.value_or(2 * cfg.model.horizon);
      spec.stride = cm_stride;
      spec.physics = cfg.physics;
      print_rmse(evaluate_runs(spec, cm_c.out));
    }
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric divergence: " << e.what() << "\n";
    return 3;
  } catch (const DegenerateStateError& e) {
    std::cerr << "numeric divergence: " << e.what() << "\n";
    return 3;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

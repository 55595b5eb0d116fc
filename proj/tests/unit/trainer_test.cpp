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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "slung/errors.hpp"

namespace slung {
namespace {

ParameterStore two_params(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParameterStore s;
  s.add("a", testing::random_tensor(2, 3, rng));
  s.add("frozen", testing::random_tensor(1, 2, rng), false);
  s.add("b", testing::random_tensor(1, 4, rng));
  return s;
}

void set_grads(ParameterStore& s, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < s.size(); ++i) s[i].grad = testing::random_tensor(s[i].value.rows(), s[i].value.cols(), rng);
}

TEST(AdamStep, ZeroGradientZeroDecayLeavesParameters) {
  ParameterStore s = two_params(1);
  const ParameterStore before = s;
  s.zero_grad();
  TrainConfig cfg;
  cfg.weight_decay = 0.0;
  AdamState st = make_adam_state(s);
  for (int k = 0; k < 3; ++k) adam_step(s, st, cfg);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(testing::flat(s[i].value), testing::flat(before[i].value));
  }
  EXPECT_EQ(st.step, 3u);
}

TEST(AdamStep, FirstStepMovesByLearningRate) {
  ParameterStore s;
  s.add("x", Tensor::row({2.0, -1.0, 0.5}));
  s.at("x").grad = Tensor::row({0.3, -7.0, 1e-3});
  TrainConfig cfg;
  cfg.weight_decay = 0.0;
  cfg.lr = 0.01;
  AdamState st = make_adam_state(s);
  adam_step(s, st, cfg);
  const double start[] = {2.0, -1.0, 0.5}, g[] = {0.3, -7.0, 1e-3};
  for (int j = 0; j < 3; ++j) {
    // Bias-corrected moments are g and g^2 after one step.
    EXPECT_NEAR(s.at("x").value[j], start[j] - 0.01 * g[j] / (std::abs(g[j]) + 1e-8), 1e-15);
    EXPECT_NEAR(std::abs(s.at("x").value[j] - start[j]), 0.01, 1e-7);
  }
}

// Plain reference implementation, one scalar at a time.
struct RefAdam {
  double m = 0, v = 0;
  int t = 0;
  double update(double p, double g, const TrainConfig& c) {
    ++t;
    m = c.beta1 * m + (1 - c.beta1) * g;
    v = c.beta2 * v + (1 - c.beta2) * g * g;
    const double mh = m / (1 - std::pow(c.beta1, t)), vh = v / (1 - std::pow(c.beta2, t));
    p -= c.lr * c.weight_decay * p;
    return p - c.lr * mh / (std::sqrt(vh) + c.eps);
  }
};

TEST(AdamStep, MatchesReferenceTrajectory) {
  ParameterStore s = two_params(2);
  TrainConfig cfg;
  cfg.lr = 0.05;
  AdamState st = make_adam_state(s);
  std::vector<RefAdam> ref(s.at("b").value.size());
  std::vector<double> p(s.at("b").value.values().begin(), s.at("b").value.values().end());
  const Tensor frozen = s.at("frozen").value;
  std::mt19937_64 rng(5);
  for (int k = 0; k < 6; ++k) {
    set_grads(s, rng);
    for (std::size_t j = 0; j < p.size(); ++j) p[j] = ref[j].update(p[j], s.at("b").grad[j], cfg);
    adam_step(s, st, cfg);
  }
  for (std::size_t j = 0; j < p.size(); ++j) EXPECT_NEAR(s.at("b").value[j], p[j], 1e-14);
  EXPECT_EQ(testing::flat(s.at("frozen").value), testing::flat(frozen));
}

TEST(AdamStep, DecoupledDecayShrinksWithoutGradient) {
  ParameterStore s = two_params(3);
  const ParameterStore before = s;
  s.zero_grad();
  TrainConfig cfg;
  cfg.lr = 0.1;
  cfg.weight_decay = 0.05;
  AdamState st = make_adam_state(s);
  adam_step(s, st, cfg);
  for (std::size_t j = 0; j < 6; ++j) {
    EXPECT_DOUBLE_EQ(s.at("a").value[j], before.at("a").value[j] * (1 - 0.1 * 0.05));
  }
}

TEST(AdamStep, ZeroDecayModesAgreeBitwise) {
  ParameterStore a = two_params(4), b = two_params(4);
  TrainConfig ca, cb;
  ca.weight_decay = cb.weight_decay = 0.0;
  cb.decoupled_weight_decay = false;
  AdamState sa = make_adam_state(a), sb = make_adam_state(b);
  std::mt19937_64 ra(9), rb(9);
  for (int k = 0; k < 10; ++k) {
    set_grads(a, ra);
    set_grads(b, rb);
    adam_step(a, sa, ca);
    adam_step(b, sb, cb);
  }
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(testing::flat(a[i].value), testing::flat(b[i].value));

  // With decay the two forms differ.
  cb.weight_decay = ca.weight_decay = 0.05;
  set_grads(a, ra);
  set_grads(b, rb);
  adam_step(a, sa, ca);
  adam_step(b, sb, cb);
  EXPECT_NE(testing::flat(a.at("a").value), testing::flat(b.at("a").value));
}

TEST(AdamStep, ShapeMismatchThrows) {
  ParameterStore s = two_params(1);
  AdamState st = make_adam_state(s);
  s.at("a").grad = Tensor::zeros(3, 2);
  EXPECT_THROW(adam_step(s, st, TrainConfig{}), ShapeError);
  AdamState empty;
  s.zero_grad();
  EXPECT_THROW(adam_step(s, empty, TrainConfig{}), ShapeError);
}

TEST(ClipGradients, ScalesToTheLimit) {
  ParameterStore s;
  s.add("x", Tensor::row({0, 0}));
  s.add("y", Tensor::row({0}));
  s.add("frozen", Tensor::row({0}), false);
  s.at("x").grad = Tensor::row({3, 0});
  s.at("y").grad = Tensor::row({4});
  s.at("frozen").grad = Tensor::row({100});
  EXPECT_DOUBLE_EQ(clip_gradients(s, 10.0), 5.0);
  EXPECT_DOUBLE_EQ(s.at("x").grad[0], 3.0);
  EXPECT_DOUBLE_EQ(clip_gradients(s, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(s.at("x").grad[0], 0.6);
  EXPECT_DOUBLE_EQ(s.at("y").grad[0], 0.8);
  EXPECT_DOUBLE_EQ(s.at("frozen").grad[0], 100.0);
}

TEST(TrainConfigTest, ProfilesAndValidation) {
  const TrainConfig d = TrainConfig::desk(), p = TrainConfig::paper();
  EXPECT_EQ(d.lr, 1e-4);
  EXPECT_EQ(d.weight_decay, 0.05);
  EXPECT_EQ(d.batch_size, 32u);
  EXPECT_EQ(d.max_epochs, 500u);
  EXPECT_EQ(d.patience, 50u);
  EXPECT_EQ(p.batch_size, 256u);
  EXPECT_EQ(p.max_epochs, 3000u);
  TrainConfig bad;
  bad.patience = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = TrainConfig{};
  bad.lr = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Variants, AblationSettings) {
  ModelConfig m;
  LossWeights w;
  apply_variant(Variant::kNoPhysics, m, w);
  EXPECT_FALSE(m.slack_head);
  EXPECT_EQ(w.phi, 0.0);
  EXPECT_EQ(w.rho, 0.0);
  m = ModelConfig{};
  w = LossWeights{};
  apply_variant(Variant::kNoSlack, m, w);
  EXPECT_FALSE(m.slack_head);
  EXPECT_EQ(w.phi, 5.0);
  EXPECT_EQ(variant_from_name("no_slack"), Variant::kNoSlack);
  EXPECT_THROW(variant_from_name("other"), std::invalid_argument);
}

class TrainLoop : public ::testing::Test {
 protected:
  void SetUp() override {
    cfg_ = testing::small_config(4, 3);
    train_ = testing::rollout_windows(10, 4, 3, 1);
    val_ = testing::rollout_windows(4, 4, 3, 2);
    tc_.batch_size = 4;
    tc_.lr = 1e-2;
    tc_.max_epochs = 5;
  }
  ModelConfig cfg_;
  std::vector<SequenceWindow> train_, val_;
  TrainConfig tc_;
};

TEST_F(TrainLoop, PatienceStopsAndReturnsBestEpoch) {
  Seq2SeqModel model(cfg_, 3);
  model.set_normalization(testing::fixture_normalization());
  tc_.patience = 1;
  tc_.max_epochs = 10;
  const double vals[] = {5.0, 3.0, 4.0, 4.5, 6.0};
  std::vector<ParameterStore> snapshots;
  TrainHooks hooks;
  hooks.validation_override = [&](std::size_t e) {
    LossTerms::Values v;
    v.total = vals[e];
    return v;
  };
  hooks.on_epoch = [&](const EpochRecord&) { snapshots.push_back(model.params()); };
  const TrainResult r = train(model, train_, val_, LossWeights{}, PhysicalParams{}, tc_, hooks);
  EXPECT_EQ(r.history.size(), 3u);  // epochs 0, 1, 2
  EXPECT_EQ(r.best_epoch, 1u);
  EXPECT_EQ(r.stop_reason, "patience");
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    EXPECT_EQ(testing::flat(model.params()[i].value), testing::flat(snapshots[1][i].value));
  }
}

TEST_F(TrainLoop, BestCheckpointNeverWorseThanLaterEpochs) {
  Seq2SeqModel model(cfg_, 3);
  model.set_normalization(testing::fixture_normalization());
  tc_.max_epochs = 6;
  const TrainResult r = train(model, train_, val_, LossWeights{}, PhysicalParams{}, tc_);
  for (std::size_t e = r.best_epoch; e < r.history.size(); ++e) {
    EXPECT_LE(r.best_validation, r.history[e].validation.total);
  }
  const auto now = evaluate_loss(model, val_, LossWeights{}, PhysicalParams{}, 64);
  EXPECT_DOUBLE_EQ(now.total, r.best_validation);
  EXPECT_LT(r.best_validation, r.history[0].validation.total);
}

TEST_F(TrainLoop, FixedSeedIsBitReproducible) {
  auto run = [&] {
    Seq2SeqModel model(cfg_, 8);
    model.set_normalization(testing::fixture_normalization());
    const TrainResult r = train(model, train_, val_, LossWeights{}, PhysicalParams{}, tc_);
    return std::pair{testing::flat(model.params().at("dec.lstm0.wx").value), r.history.back().train.total};
  };
  const auto a = run(), b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
}

TEST_F(TrainLoop, GuardsAndErrors) {
  Seq2SeqModel model(cfg_, 3);
  model.set_normalization(testing::fixture_normalization());
  EXPECT_THROW(train(model, {}, val_, LossWeights{}, PhysicalParams{}, tc_), DataError);
  EXPECT_THROW(train(model, train_, {}, LossWeights{}, PhysicalParams{}, tc_), DataError);
  TrainHooks hooks;
  hooks.validation_override = [](std::size_t e) {
    LossTerms::Values v;
    v.total = e == 2 ? std::numeric_limits<double>::quiet_NaN() : 1.0 / static_cast<double>(e + 1);
    return v;
  };
  try {
    train(model, train_, val_, LossWeights{}, PhysicalParams{}, tc_, hooks);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 2"), std::string::npos) << e.what();
  }
}

TEST_F(TrainLoop, TrainingLogCsv) {
  Seq2SeqModel model(cfg_, 3);
  model.set_normalization(testing::fixture_normalization());
  tc_.max_epochs = 2;
  const TrainResult r = train(model, train_, val_, LossWeights{}, PhysicalParams{}, tc_);
  const auto path = std::filesystem::temp_directory_path() / "slung_trainlog_test.csv";
  write_training_log(path, r.history);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "epoch,split,L_fit,L_physics,L_projection,L_slack,total");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 6);
  std::filesystem::remove(path);
}

// Noise-free model rollouts: the fit term must fall by 90% within 200 epochs.
TEST(TrainFit, ExactRolloutsAreLearned) {
  ModelConfig cfg = testing::small_config(8, 4, 1);
  cfg.latent_dim = 16;
  cfg.hidden_dim = 16;
  cfg.attention_dim = 8;
  const auto train_w = testing::rollout_windows(16, 8, 4, 3);
  const auto val_w = testing::rollout_windows(6, 8, 4, 4);
  Seq2SeqModel model(cfg, 1);
  Normalization norm = testing::fixture_normalization();
  norm.delta_scale.setConstant(0.003);
  model.set_normalization(norm);
  TrainConfig tc;
  tc.batch_size = 8;
  tc.lr = 3e-3;
  tc.max_epochs = 200;
  tc.patience = 200;
  const TrainResult r = train(model, train_w, val_w, LossWeights{}, PhysicalParams{}, tc);
  double best_fit = r.history[0].validation.fit;
  for (const EpochRecord& e : r.history) best_fit = std::min(best_fit, e.validation.fit);
  EXPECT_LT(best_fit, 0.1 * r.history[0].validation.fit)
      << "epoch-0 fit " << r.history[0].validation.fit << ", best " << best_fit;
}

}  // namespace
}  // namespace slung

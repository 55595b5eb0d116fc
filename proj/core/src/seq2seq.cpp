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

#include "slung/seq2seq.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "slung/errors.hpp"

namespace slung {

namespace {

Tensor diagonal(std::span<const double> d) {
  Tensor t = Tensor::zeros(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) t(i, i) = d[i];
  return t;
}

template <typename Vec>
Tensor as_row(const Vec& v) {
  Tensor t = Tensor::zeros(1, static_cast<std::size_t>(v.size()));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = v[static_cast<Eigen::Index>(i)];
  return t;
}

template <typename Vec>
Vec from_row(const Tensor& t) {
  Vec v;
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = t[static_cast<std::size_t>(i)];
  return v;
}

}  // namespace

ModelConfig ModelConfig::paper() {
  ModelConfig c;
  c.latent_dim = 32;
  c.hidden_dim = 120;
  c.num_layers = 1;
  c.attention_dim = 56;
  return c;
}

void ModelConfig::validate() const {
  if (state_dim != static_cast<std::size_t>(kStateDim) ||
      control_dim != static_cast<std::size_t>(kControlDim)) {
    throw std::invalid_argument("model config: state/control dims are fixed at 13/4");
  }
  if (latent_dim == 0 || hidden_dim == 0 || num_layers == 0 || attention_dim == 0 ||
      history == 0 || horizon == 0) {
    throw std::invalid_argument("model config: all sizes must be >= 1");
  }
}

WindowBatch WindowBatch::from_windows(std::span<const SequenceWindow* const> windows,
                                      std::size_t horizon) {
  if (windows.empty()) throw ShapeError("window batch: no windows");
  const std::size_t b = windows.size();
  const std::size_t m = windows.front()->history_length();
  for (const SequenceWindow* w : windows) {
    if (w->history_length() != m || w->history_controls.size() != m) {
      throw ShapeError("window batch: history length " + std::to_string(w->history_length()) +
                       " vs " + std::to_string(m));
    }
    if (w->horizon() < horizon || w->future_controls.size() + 1 < horizon) {
      throw ShapeError("window batch: window horizon " + std::to_string(w->horizon()) +
                       " shorter than requested " + std::to_string(horizon));
    }
  }
  WindowBatch batch;
  batch.size = b;
  batch.history_states.assign(m, Tensor::zeros(b, kStateDim));
  batch.history_controls.assign(m, Tensor::zeros(b, kControlDim));
  batch.step_controls.assign(horizon, Tensor::zeros(b, kControlDim));
  batch.future_states.assign(horizon, Tensor::zeros(b, kStateDim));
  batch.omega_load = Tensor::zeros(b, 3);
  for (std::size_t r = 0; r < b; ++r) {
    const SequenceWindow& w = *windows[r];
    for (std::size_t k = 0; k < m; ++k) {
      for (int j = 0; j < kStateDim; ++j) batch.history_states[k](r, j) = w.history_states[k][j];
      for (int j = 0; j < kControlDim; ++j) batch.history_controls[k](r, j) = w.history_controls[k][j];
    }
    for (std::size_t n = 0; n < horizon; ++n) {
      const ControlVector& u = w.step_control(n);
      for (int j = 0; j < kControlDim; ++j) batch.step_controls[n](r, j) = u[j];
      for (int j = 0; j < kStateDim; ++j) batch.future_states[n](r, j) = w.future_states[n][j];
    }
    for (int j = 0; j < 3; ++j) batch.omega_load(r, j) = w.omega_load[j];
  }
  return batch;
}

Seq2SeqModel::Seq2SeqModel(ModelConfig config, std::uint64_t seed)
    : config_(config), seed_(seed) {
  config_.validate();
  const std::size_t l = config_.latent_dim, h = config_.hidden_dim, a = config_.attention_dim;
  const std::size_t in = config_.state_dim + config_.control_dim;
  std::uint64_t stream = seed_;

  add_linear("enc.embed.fc0", in, l, stream);
  add_linear("enc.embed.fc1", l, l, stream);
  for (std::size_t k = 0; k < config_.num_layers; ++k) {
    add_lstm("enc.lstm" + std::to_string(k), k == 0 ? l : h, h, stream);
  }
  add_linear("dec.embed.fc0", in, l, stream);
  add_linear("dec.embed.fc1", l, l, stream);

  std::mt19937_64 rng(stream++);
  const double bound_q = 1.0 / std::sqrt(static_cast<double>(h));
  const double bound_v = 1.0 / std::sqrt(static_cast<double>(a));
  for (const char* name : {"attn.wq", "attn.wk"}) {
    std::uniform_real_distribution<double> d(-bound_q, bound_q);
    Tensor w = Tensor::zeros(h, a);
    for (double& v : w.values()) v = d(rng);
    params_.add(name, std::move(w));
  }
  {
    std::uniform_real_distribution<double> d(-bound_v, bound_v);
    Tensor v = Tensor::zeros(a, 1);
    for (double& x : v.values()) x = d(rng);
    params_.add("attn.v", std::move(v));
  }

  for (std::size_t k = 0; k < config_.num_layers; ++k) {
    add_lstm("dec.lstm" + std::to_string(k), k == 0 ? h + l : h, h, stream);
  }
  add_linear("head.trunk", h, h, stream);
  add_linear("head.state", h, config_.state_dim, stream);
  if (config_.slack_head) add_linear("head.slack", h, config_.state_dim, stream);

  params_.add("norm.state_mean", Tensor::zeros(1, kStateDim), false);
  params_.add("norm.state_scale", Tensor::filled(1, kStateDim, 1.0), false);
  params_.add("norm.control_mean", Tensor::zeros(1, kControlDim), false);
  params_.add("norm.control_scale", Tensor::filled(1, kControlDim, 1.0), false);
  params_.add("norm.delta_scale", Tensor::filled(1, kStateDim, 1.0), false);
}

void Seq2SeqModel::add_linear(const std::string& name, std::size_t in, std::size_t out,
                              std::uint64_t& stream) {
  std::mt19937_64 rng(stream++);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> d(-bound, bound);
  Tensor w = Tensor::zeros(in, out);
  for (double& v : w.values()) v = d(rng);
  Tensor b = Tensor::zeros(1, out);
  for (double& v : b.values()) v = d(rng);
  params_.add(name + ".w", std::move(w));
  params_.add(name + ".b", std::move(b));
}

void Seq2SeqModel::add_lstm(const std::string& name, std::size_t in, std::size_t hidden,
                            std::uint64_t& stream) {
  std::mt19937_64 rng(stream++);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in + hidden));
  std::uniform_real_distribution<double> d(-bound, bound);
  Tensor wx = Tensor::zeros(in, 4 * hidden);
  for (double& v : wx.values()) v = d(rng);
  Tensor wh = Tensor::zeros(hidden, 4 * hidden);
  for (double& v : wh.values()) v = d(rng);
  Tensor b = Tensor::zeros(1, 4 * hidden);
  for (std::size_t j = 0; j < 4 * hidden; ++j) {
    b[j] = (j >= hidden && j < 2 * hidden) ? 1.0 : d(rng);
  }
  params_.add(name + ".wx", std::move(wx));
  params_.add(name + ".wh", std::move(wh));
  params_.add(name + ".b", std::move(b));
}

void Seq2SeqModel::set_normalization(const Normalization& norm) {
  for (int i = 0; i < kStateDim; ++i) {
    if (!(norm.state_scale[i] > 0.0) || !(norm.delta_scale[i] > 0.0)) {
      throw std::invalid_argument("normalization: scales must be positive");
    }
  }
  for (int i = 0; i < kControlDim; ++i) {
    if (!(norm.control_scale[i] > 0.0)) {
      throw std::invalid_argument("normalization: scales must be positive");
    }
  }
  params_.at("norm.state_mean").value = as_row(norm.state_mean);
  params_.at("norm.state_scale").value = as_row(norm.state_scale);
  params_.at("norm.control_mean").value = as_row(norm.control_mean);
  params_.at("norm.control_scale").value = as_row(norm.control_scale);
  params_.at("norm.delta_scale").value = as_row(norm.delta_scale);
}

Normalization Seq2SeqModel::normalization() const {
  Normalization n;
  n.state_mean = from_row<StateVector>(params_.at("norm.state_mean").value);
  n.state_scale = from_row<StateVector>(params_.at("norm.state_scale").value);
  n.control_mean = from_row<ControlVector>(params_.at("norm.control_mean").value);
  n.control_scale = from_row<ControlVector>(params_.at("norm.control_scale").value);
  n.delta_scale = from_row<StateVector>(params_.at("norm.delta_scale").value);
  return n;
}

const Var& Seq2SeqModel::Bound::operator()(const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw std::out_of_range("model: unbound parameter '" + name + "'");
  return it->second;
}

namespace {

// Derived normalization constants: input affine maps and the output scale.
void bind_normalization(Tape& tape, const ParameterStore& params,
                        std::unordered_map<std::string, Var>& vars) {
  const Tensor& sm = params.at("norm.state_mean").value;
  const Tensor& ss = params.at("norm.state_scale").value;
  const Tensor& cm = params.at("norm.control_mean").value;
  const Tensor& cs = params.at("norm.control_scale").value;
  std::vector<double> inv_s(ss.size()), shift_s(ss.size()), inv_c(cs.size()), shift_c(cs.size());
  for (std::size_t i = 0; i < ss.size(); ++i) {
    inv_s[i] = 1.0 / ss[i];
    shift_s[i] = -sm[i] / ss[i];
  }
  for (std::size_t i = 0; i < cs.size(); ++i) {
    inv_c[i] = 1.0 / cs[i];
    shift_c[i] = -cm[i] / cs[i];
  }
  vars.emplace("norm.state_in", tape.constant(diagonal(inv_s)));
  vars.emplace("norm.state_shift", tape.constant(Tensor({1, shift_s.size()}, shift_s)));
  vars.emplace("norm.control_in", tape.constant(diagonal(inv_c)));
  vars.emplace("norm.control_shift", tape.constant(Tensor({1, shift_c.size()}, shift_c)));
  vars.emplace("norm.delta_out", tape.constant(diagonal(params.at("norm.delta_scale").value.values())));
}

}  // namespace

Seq2SeqModel::Bound Seq2SeqModel::bind(Tape& tape) {
  Bound b;
  b.tape_ = &tape;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = params_[i];
    if (p.trainable) b.vars_.emplace(p.name, tape.leaf(p));
  }
  bind_normalization(tape, params_, b.vars_);
  return b;
}

Seq2SeqModel::Bound Seq2SeqModel::bind_constant(Tape& tape) const {
  Bound b;
  b.tape_ = &tape;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Parameter& p = params_[i];
    if (p.trainable) b.vars_.emplace(p.name, tape.constant(p.value));
  }
  bind_normalization(tape, params_, b.vars_);
  return b;
}

Var Seq2SeqModel::linear(const Bound& p, const std::string& name, const Var& x) const {
  return add_bias(matmul(x, p(name + ".w")), p(name + ".b"));
}

Var Seq2SeqModel::lstm(const Bound& p, const std::string& name, const Var& x, Var& h,
                       Var& c) const {
  const std::size_t hd = config_.hidden_dim;
  const Var z = add_bias(add(matmul(x, p(name + ".wx")), matmul(h, p(name + ".wh"))), p(name + ".b"));
  const Var hc = lstm_pointwise(z, c);
  h = slice(hc, 1, 0, hd);
  c = slice(hc, 1, hd, 2 * hd);
  return h;
}

Var Seq2SeqModel::embed(const Bound& p, const std::string& prefix, const Var& x,
                        const Var& u) const {
  if (x.cols() != config_.state_dim || u.cols() != config_.control_dim || x.rows() != u.rows()) {
    throw ShapeError("embed: state " + x.value().shape_string() + " and control " +
                     u.value().shape_string() + " do not match the model");
  }
  const Var xn = add_bias(matmul(x, p("norm.state_in")), p("norm.state_shift"));
  const Var un = add_bias(matmul(u, p("norm.control_in")), p("norm.control_shift"));
  const Var hidden = gelu(linear(p, prefix + ".fc0", concat({xn, un}, 1)));
  return linear(p, prefix + ".fc1", hidden);
}

Seq2SeqModel::Encoded Seq2SeqModel::encode(const Bound& p, const WindowBatch& batch) const {
  if (batch.history_states.size() != config_.history) {
    throw ShapeError("encode: history length " + std::to_string(batch.history_states.size()) +
                     " but the model expects " + std::to_string(config_.history));
  }
  Tape& tape = p.tape();
  const std::size_t b = batch.size, hd = config_.hidden_dim;
  LstmState st;
  for (std::size_t k = 0; k < config_.num_layers; ++k) {
    st.h.push_back(tape.constant(Tensor::zeros(b, hd)));
    st.c.push_back(tape.constant(Tensor::zeros(b, hd)));
  }
  std::vector<Var> tops;
  tops.reserve(config_.history);
  for (std::size_t t = 0; t < config_.history; ++t) {
    Var in = embed(p, "enc.embed", tape.constant(batch.history_states[t]),
                   tape.constant(batch.history_controls[t]));
    for (std::size_t k = 0; k < config_.num_layers; ++k) {
      in = lstm(p, "enc.lstm" + std::to_string(k), in, st.h[k], st.c[k]);
    }
    tops.push_back(in);
  }
  Encoded enc;
  enc.values = tops.size() == 1 ? tops.front() : concat(tops, 0);
  enc.keys = matmul(enc.values, p("attn.wk"));
  enc.final = std::move(st);
  return enc;
}

Var Seq2SeqModel::attend(const Bound& p, const Var& query, const Encoded& enc, Var* weights) const {
  const Var scores = additive_scores(enc.keys, matmul(query, p("attn.wq")), p("attn.v"));
  const Var w = softmax(scores, 1);
  if (weights != nullptr) *weights = w;
  return weighted_row_sum(enc.values, w);
}

Seq2SeqModel::DecodeResult Seq2SeqModel::decode_step(const Bound& p, const Var& x_in, const Var& u,
                                                     const LstmState& hidden,
                                                     const Encoded& enc) const {
  DecodeResult r;
  r.next = hidden;
  const Var z = embed(p, "dec.embed", x_in, u);
  const Var ctx = attend(p, hidden.h.back(), enc, &r.attention);
  Var in = concat({ctx, z}, 1);
  for (std::size_t k = 0; k < config_.num_layers; ++k) {
    in = lstm(p, "dec.lstm" + std::to_string(k), in, r.next.h[k], r.next.c[k]);
  }
  const Var trunk = gelu(linear(p, "head.trunk", in));
  r.state = add(x_in, matmul(linear(p, "head.state", trunk), p("norm.delta_out")));
  if (config_.slack_head) {
    r.slack = matmul(linear(p, "head.slack", trunk), p("norm.delta_out"));
  } else {
    r.slack = p.tape().constant(Tensor::zeros(x_in.rows(), config_.state_dim));
  }
  return r;
}

Seq2SeqModel::Forward Seq2SeqModel::forward(const Bound& p, const WindowBatch& batch,
                                            std::size_t horizon) const {
  if (horizon == 0 || batch.step_controls.size() < horizon) {
    throw ShapeError("forward: batch carries " + std::to_string(batch.step_controls.size()) +
                     " decode controls, horizon " + std::to_string(horizon) + " requested");
  }
  Tape& tape = p.tape();
  const Encoded enc = encode(p, batch);
  Forward out;
  LstmState hidden = enc.final;
  Var x = tape.constant(batch.history_states.back());
  for (std::size_t n = 0; n < horizon; ++n) {
    DecodeResult r = decode_step(p, x, tape.constant(batch.step_controls[n]), hidden, enc);
    out.states.push_back(r.state);
    out.slacks.push_back(r.slack);
    out.attention.push_back(r.attention);
    hidden = std::move(r.next);
    x = r.state;
  }
  return out;
}

std::vector<PredictionOutput> Seq2SeqModel::predict_batch(
    std::span<const SequenceWindow* const> windows, std::size_t horizon) const {
  // Only the history and the decode controls are needed; truth may be absent.
  std::vector<SequenceWindow> stripped;
  stripped.reserve(windows.size());
  for (const SequenceWindow* w : windows) {
    if (w->future_controls.size() + 1 < horizon) {
      throw ShapeError("predict: window provides " + std::to_string(w->future_controls.size()) +
                       " future controls, horizon " + std::to_string(horizon) + " requested");
    }
    SequenceWindow s;
    s.history_states = w->history_states;
    s.history_controls = w->history_controls;
    s.future_controls = w->future_controls;
    s.future_states.assign(horizon, StateVector::Zero());
    s.omega_load = w->omega_load;
    stripped.push_back(std::move(s));
  }
  std::vector<const SequenceWindow*> ptrs;
  for (const SequenceWindow& s : stripped) ptrs.push_back(&s);
  const WindowBatch batch = WindowBatch::from_windows(ptrs, horizon);

  Tape tape;
  const Bound p = bind_constant(tape);
  const Forward f = forward(p, batch, horizon);
  std::vector<PredictionOutput> out(windows.size());
  for (std::size_t r = 0; r < windows.size(); ++r) {
    out[r].states.resize(horizon);
    out[r].slacks.resize(horizon);
    for (std::size_t n = 0; n < horizon; ++n) {
      for (int j = 0; j < kStateDim; ++j) {
        out[r].states[n][j] = f.states[n].value()(r, j);
        out[r].slacks[n][j] = f.slacks[n].value()(r, j);
      }
    }
  }
  return out;
}

PredictionOutput Seq2SeqModel::predict(const SequenceWindow& window, std::size_t horizon) const {
  const SequenceWindow* ptr = &window;
  return predict_batch(std::span<const SequenceWindow* const>(&ptr, 1), horizon).front();
}

}  // namespace slung

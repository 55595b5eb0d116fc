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

#include "slung/datakit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "slung/errors.hpp"

namespace slung {

namespace {

constexpr const char* kColumns[] = {"t",  "px", "py", "pz", "vx",  "vy",  "vz",
                                    "qw", "qx", "qy", "qz", "plx", "ply", "plz",
                                    "thrust", "wx", "wy", "wz"};
constexpr const char* kOmegaColumns[] = {"olx", "oly", "olz"};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Vec3 clip(const Vec3& v, double limit) { return v.cwiseMax(-limit).cwiseMin(limit); }

}  // namespace

std::string LogSchema::column(const std::string& canonical) const {
  auto it = columns.find(canonical);
  return it == columns.end() ? canonical : it->second;
}

void write_log(const std::filesystem::path& path, const FlightLog& log) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write log " + path.string());
  out << "# slung-log v1 dt=" << fmt(log.dt) << " id=" << log.id << '\n';
  for (std::size_t i = 0; i < std::size(kColumns); ++i) out << (i ? "," : "") << kColumns[i];
  if (log.has_omega_load()) {
    for (const char* c : kOmegaColumns) out << ',' << c;
  }
  out << '\n';
  for (std::size_t k = 0; k < log.size(); ++k) {
    out << fmt(log.t[k]);
    for (int j = 0; j < kStateDim; ++j) out << ',' << fmt(log.states[k][j]);
    for (int j = 0; j < kControlDim; ++j) out << ',' << fmt(log.controls[k][j]);
    if (log.has_omega_load()) {
      for (int j = 0; j < 3; ++j) out << ',' << fmt(log.omega_load[k][j]);
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing log " + path.string());
}

FlightLog load_log(const std::filesystem::path& path, const LogSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open log " + path.string());
  const std::string where = path.string();
  FlightLog log;
  log.id = path.stem().string();
  std::optional<double> meta_dt;

  std::string line;
  std::size_t line_no = 0;
  std::vector<int> index;  // canonical column -> file column
  std::array<int, 3> omega_index{-1, -1, -1};
  std::size_t width = 0;
  std::size_t renormalized = 0;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string s = trim(line);
    if (s.empty()) continue;
    if (s[0] == '#') {
      std::istringstream meta(s.substr(1));
      std::string tok;
      while (meta >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        double v = 0.0;
        if (key == "dt" && parse_double(val, v)) meta_dt = v;
        if (key == "id" && !val.empty()) log.id = val;
      }
      continue;
    }
    if (index.empty()) {
      const std::vector<std::string> header = split_csv(s);
      width = header.size();
      auto find = [&](const std::string& canonical) {
        const std::string name = schema.column(canonical);
        const auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : static_cast<int>(it - header.begin());
      };
      for (const char* c : kColumns) {
        const int i = find(c);
        if (i < 0) {
          throw DataError(where + ":" + std::to_string(line_no) + ": missing column '" +
                          schema.column(c) + "'");
        }
        index.push_back(i);
      }
      int found = 0;
      for (int j = 0; j < 3; ++j) {
        omega_index[j] = find(kOmegaColumns[j]);
        found += omega_index[j] >= 0;
      }
      if (found != 0 && found != 3) {
        throw DataError(where + ": load angular velocity columns must appear together");
      }
      continue;
    }
    const std::vector<std::string> cells = split_csv(s);
    if (cells.size() != width) {
      throw DataError(where + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(width) + " fields, got " + std::to_string(cells.size()));
    }
    std::array<double, std::size(kColumns)> row{};
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (!parse_double(cells[static_cast<std::size_t>(index[j])], row[j])) {
        throw DataError(where + ":" + std::to_string(line_no) + ": bad value '" +
                        cells[static_cast<std::size_t>(index[j])] + "' in column " + kColumns[j]);
      }
    }
    StateVector x;
    for (int j = 0; j < kStateDim; ++j) x[j] = row[static_cast<std::size_t>(j) + 1];
    ControlVector u;
    for (int j = 0; j < kControlDim; ++j) u[j] = row[static_cast<std::size_t>(j) + 14];
    if (u[0] < 0.0) {
      throw DataError(where + ":" + std::to_string(line_no) + ": negative thrust");
    }
    const double qn = x.segment<4>(6).norm();
    if (std::abs(qn - 1.0) > schema.quat_tolerance) {
      throw DataError(where + ":" + std::to_string(line_no) + ": quaternion norm " + fmt(qn) +
                      " outside tolerance");
    }
    if (qn != 1.0) {
      x.segment<4>(6) /= qn;
      if (std::abs(qn - 1.0) > 1e-12) ++renormalized;
    }
    if (omega_index[0] >= 0) {
      Vec3 om;
      for (int j = 0; j < 3; ++j) {
        if (!parse_double(cells[static_cast<std::size_t>(omega_index[j])], om[j])) {
          throw DataError(where + ":" + std::to_string(line_no) + ": bad value in column " +
                          kOmegaColumns[j]);
        }
      }
      log.omega_load.push_back(om);
    }
    // Hemisphere: first row w >= 0, then continuity.
    const bool flip = log.states.empty() ? x[6] < 0.0
                                         : x.segment<4>(6).dot(log.states.back().segment<4>(6)) < 0.0;
    if (flip) x.segment<4>(6) = -x.segment<4>(6);

    if (!log.t.empty()) {
      const double step = row[0] - log.t.back();
      if (!meta_dt && log.t.size() == 1) log.dt = step;
      const double h = meta_dt.value_or(log.dt);
      if (!(step > 0.0) || std::abs(step - h) > schema.time_tolerance) {
        throw DataError(where + ":" + std::to_string(line_no) + ": non-uniform timestamps (step " +
                        fmt(step) + " s, expected " + fmt(h) + " s)");
      }
    }
    log.t.push_back(row[0]);
    log.states.push_back(x);
    log.controls.push_back(u);
  }
  if (index.empty()) throw DataError(where + ": no header row");
  if (log.states.empty()) throw DataError(where + ": no data rows");
  if (meta_dt) {
    if (!(*meta_dt > 0.0)) throw DataError(where + ": non-positive dt in metadata");
    log.dt = *meta_dt;
  }
  if (renormalized > 0) {
    warn(where + ": renormalized " + std::to_string(renormalized) + " quaternion(s)");
  }
  return log;
}

std::size_t window_count(std::size_t length, std::size_t m, std::size_t n, std::size_t stride) {
  if (stride == 0) throw std::invalid_argument("window stride must be >= 1");
  if (length < m + n) return 0;
  return (length - m - n) / stride + 1;
}

std::vector<SequenceWindow> make_windows(const FlightLog& log, std::size_t m, std::size_t n,
                                         std::size_t stride, const PhysicalParams& params) {
  if (m == 0 || n == 0) throw std::invalid_argument("windows need m, n >= 1");
  const std::size_t count = window_count(log.size(), m, n, stride);
  std::vector<SequenceWindow> out;
  if (count == 0) {
    warn("log '" + log.id + "' has " + std::to_string(log.size()) + " rows, fewer than " +
         std::to_string(m + n) + "; no windows");
    return out;
  }
  out.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    const std::size_t s = w * stride;
    SequenceWindow win;
    win.log_id = log.id;
    win.start = s;
    win.history_states.assign(log.states.begin() + static_cast<long>(s),
                              log.states.begin() + static_cast<long>(s + m));
    win.history_controls.assign(log.controls.begin() + static_cast<long>(s),
                                log.controls.begin() + static_cast<long>(s + m));
    win.future_states.assign(log.states.begin() + static_cast<long>(s + m),
                             log.states.begin() + static_cast<long>(s + m + n));
    win.future_controls.assign(log.controls.begin() + static_cast<long>(s + m),
                               log.controls.begin() + static_cast<long>(s + m + n));
    const std::size_t last = s + m - 1;
    if (log.has_omega_load()) {
      win.omega_load = log.omega_load[last];
    } else if (m >= 2) {
      const SystemState a = SystemState::from_vector(log.states[last - 1]);
      const SystemState b = SystemState::from_vector(log.states[last]);
      const Vec3 est = estimate_load_angular_velocity(a, b, params);
      win.omega_load =
          step(a, est, ControlInput::from_vector(log.controls[last - 1]), params).omega_load;
    }
    out.push_back(std::move(win));
  }
  return out;
}

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "?";
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "validation") return Split::kValidation;
  if (name == "test") return Split::kTest;
  throw DataError("unknown split '" + name + "'");
}

SplitAssignment assign_splits(const std::vector<std::size_t>& window_counts,
                              std::array<double, 3> fractions, std::uint64_t seed) {
  if (window_counts.size() < 3) {
    throw std::invalid_argument("split: need at least 3 logs, got " +
                                std::to_string(window_counts.size()));
  }
  double fsum = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) throw std::invalid_argument("split: fractions must be positive");
    fsum += f;
  }
  if (std::abs(fsum - 1.0) > 1e-9) throw std::invalid_argument("split: fractions must sum to 1");

  const double total = static_cast<double>(
      std::accumulate(window_counts.begin(), window_counts.end(), std::size_t{0}));
  std::vector<std::size_t> order(window_counts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  SplitAssignment r;
  r.assignment.assign(window_counts.size(), Split::kTrain);
  std::array<std::size_t, 3> logs{};
  for (std::size_t i : order) {
    int best = 0;
    double best_gap = -1e300;
    for (int s = 0; s < 3; ++s) {
      const double gap = fractions[s] * total - static_cast<double>(r.windows[s]);
      if (gap > best_gap) {
        best_gap = gap;
        best = s;
      }
    }
    r.assignment[i] = static_cast<Split>(best);
    r.windows[best] += window_counts[i];
    ++logs[best];
  }
  for (int empty = 0; empty < 3; ++empty) {
    if (logs[empty] > 0) continue;
    const int donor = static_cast<int>(std::max_element(logs.begin(), logs.end()) - logs.begin());
    std::size_t pick = window_counts.size();
    for (std::size_t i = 0; i < window_counts.size(); ++i) {
      if (static_cast<int>(r.assignment[i]) == donor &&
          (pick == window_counts.size() || window_counts[i] < window_counts[pick])) {
        pick = i;
      }
    }
    r.assignment[pick] = static_cast<Split>(empty);
    r.windows[donor] -= window_counts[pick];
    r.windows[empty] += window_counts[pick];
    --logs[donor];
    ++logs[empty];
  }
  for (int s = 0; s < 3; ++s) {
    r.achieved[s] = total > 0 ? static_cast<double>(r.windows[s]) / total : 0.0;
  }
  return r;
}

Normalization compute_normalization(const std::vector<const FlightLog*>& logs) {
  constexpr double kScaleFloor = 1e-2, kDeltaFloor = 1e-5;
  StateVector xs = StateVector::Zero(), xss = StateVector::Zero();
  StateVector dss = StateVector::Zero();
  ControlVector us = ControlVector::Zero(), uss = ControlVector::Zero();
  double n = 0.0, nd = 0.0;
  for (const FlightLog* log : logs) {
    for (std::size_t k = 0; k < log->size(); ++k) {
      xs += log->states[k];
      xss += log->states[k].cwiseAbs2();
      us += log->controls[k];
      uss += log->controls[k].cwiseAbs2();
      n += 1.0;
      if (k > 0) {
        const StateVector d = log->states[k] - log->states[k - 1];
        dss += d.cwiseAbs2();
        nd += 1.0;
      }
    }
  }
  if (n < 2.0 || nd < 1.0) throw DataError("normalization: not enough rows");
  Normalization out;
  out.state_mean = xs / n;
  out.state_scale = (xss / n - out.state_mean.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt().cwiseMax(kScaleFloor);
  out.control_mean = us / n;
  out.control_scale =
      (uss / n - out.control_mean.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt().cwiseMax(kScaleFloor);
  // Root mean square, not deviation: the head predicts raw increments.
  out.delta_scale = (dss / nd).cwiseMax(0.0).cwiseSqrt().cwiseMax(kDeltaFloor);
  return out;
}

DisturbanceConfig DisturbanceConfig::none() {
  DisturbanceConfig d;
  d.drag_vehicle = 0.0;
  d.drag_load = 0.0;
  d.sigma_position = 0.0;
  d.sigma_velocity = 0.0;
  d.sigma_quat = 0.0;
  return d;
}

const char* trajectory_name(Trajectory t) {
  switch (t) {
    case Trajectory::kHover: return "hover";
    case Trajectory::kCircle: return "circle";
    case Trajectory::kLemniscate: return "lemniscate";
    case Trajectory::kStep: return "step";
  }
  return "?";
}

Trajectory trajectory_from_name(const std::string& name) {
  for (Trajectory t : {Trajectory::kHover, Trajectory::kCircle, Trajectory::kLemniscate,
                       Trajectory::kStep}) {
    if (name == trajectory_name(t)) return t;
  }
  throw std::invalid_argument("unknown trajectory '" + name + "'");
}

StepResult disturbed_step(const SystemState& x, const Vec3& omega_load, const ControlInput& u,
                          const PhysicalParams& prm, const DisturbanceConfig& dist) {
  StepResult out = step(x, omega_load, u, prm);
  if (dist.drag_vehicle == 0.0 && dist.drag_load == 0.0) return out;
  const double h = prm.dt;
  const Vec3 xi = cable_direction(x, prm);
  const Vec3 v_load = load_velocity(x, omega_load, prm);
  const Vec3 aq = -(dist.drag_vehicle / prm.m_vehicle) * (x.v - dist.wind);
  const Vec3 al = -(dist.drag_load / prm.m_load) * (v_load - dist.wind);
  out.state.p += 0.5 * h * h * aq;
  out.state.v += h * aq;
  out.state.p_load += 0.5 * h * h * al;
  // Relative drag acceleration swings the cable.
  out.omega_load += xi.cross(h * (al - aq)) / prm.cable_length;
  return out;
}

namespace {

struct Reference {
  Vec3 pos, vel, acc;
};

// Reference shapes; parameters are drawn once per log.
class ReferenceGenerator {
 public:
  ReferenceGenerator(Trajectory kind, std::mt19937_64& rng) : kind_(kind) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    center_ = Vec3(u(rng), u(rng), 1.0 + 0.5 * u(rng));
    radius_ = 1.0 + 0.4 * u(rng);
    const double period = (kind == Trajectory::kCircle ? 7.0 : 8.0) + 1.5 * u(rng);
    rate_ = (u(rng) < 0.0 ? -1.0 : 1.0) * 2.0 * std::numbers::pi / period;
    dwell_ = 3.0 + u(rng);
    for (int i = 0; i < 3; ++i) {
      waypoints_.push_back(i == 0 ? center_
                                  : center_ + Vec3(u(rng), u(rng), 0.5 * u(rng)));
    }
  }

  Reference at(double t) const {
    const double w = rate_, r = radius_;
    switch (kind_) {
      case Trajectory::kHover:
        return {center_, Vec3::Zero(), Vec3::Zero()};
      case Trajectory::kCircle: {
        const double c = std::cos(w * t), s = std::sin(w * t);
        return {center_ + r * Vec3(c, s, 0), r * w * Vec3(-s, c, 0), -r * w * w * Vec3(c, s, 0)};
      }
      case Trajectory::kLemniscate: {
        const Vec3 p(std::sin(w * t), std::sin(2 * w * t) / 2, 0.2 * std::sin(w * t / 2));
        const Vec3 v(w * std::cos(w * t), w * std::cos(2 * w * t), 0.1 * w * std::cos(w * t / 2));
        const Vec3 a(-w * w * std::sin(w * t), -2 * w * w * std::sin(2 * w * t),
                     -0.05 * w * w * std::sin(w * t / 2));
        return {center_ + r * p, r * v, r * a};
      }
      case Trajectory::kStep: {
        const auto k = static_cast<std::size_t>(t / dwell_);
        return {waypoints_[k % waypoints_.size()], Vec3::Zero(), Vec3::Zero()};
      }
    }
    return {center_, Vec3::Zero(), Vec3::Zero()};
  }

 private:
  Trajectory kind_;
  Vec3 center_;
  double radius_, rate_, dwell_;
  std::vector<Vec3> waypoints_;
};

ControlInput track(const SystemState& x, const Vec3& omega_load, const Reference& ref,
                   const PhysicalParams& prm, const ControllerGains& k) {
  const double mq = prm.m_vehicle, ml = prm.m_load, mt = prm.total_mass(), g = prm.gravity;
  const Vec3 e3 = world_up();
  const Vec3 xi = cable_direction(x, prm);
  Vec3 swing = omega_load.cross(xi);
  swing.z() = 0.0;
  const Vec3 a_des = ref.acc + k.kp * (ref.pos - x.p) + k.kd * (ref.vel - x.v) +
                     k.kw * (mt * g / mq) * swing;
  // Force that cancels the cable coupling and gravity for the desired acceleration.
  const Vec3 b = a_des + ((mq + mt) / mq) * g * e3 +
                 (ml * mq / mt) * prm.cable_length * omega_load.squaredNorm() * xi / ml;
  const Mat3 a = Mat3::Identity() / mq + xi * xi.transpose() / mt;
  const Vec3 force = a.ldlt().solve(b);

  const Mat3 r = quat_to_rot(x.q.normalized());
  ControlInput u;
  u.thrust = std::max(force.dot(r.col(2)), 0.0);
  const Vec3 b3 = force.normalized();
  const Vec3 b2 = b3.cross(Vec3::UnitX()).normalized();
  const Vec3 b1 = b2.cross(b3);
  Mat3 rd;
  rd << b1, b2, b3;
  u.omega = clip(k.kr * so3_log(r.transpose() * rd), k.rate_limit);
  return u;
}

}  // namespace

FlightLog generate_synthetic(const PhysicalParams& params, const DisturbanceConfig& dist,
                             Trajectory trajectory, std::size_t steps, std::uint64_t seed,
                             const ControllerGains& gains) {
  params.validate();
  std::mt19937_64 rng(seed);
  const ReferenceGenerator reference(trajectory, rng);
  std::normal_distribution<double> normal(0.0, 1.0);

  FlightLog log;
  log.id = std::string(trajectory_name(trajectory)) + "-" + std::to_string(seed);
  log.dt = params.dt;
  SystemState x = hover_equilibrium(reference.at(0.0).pos, params).first;
  Vec3 omega = Vec3::Zero();
  auto fail = [&](std::size_t k, const std::string& why) {
    return NumericError("synthetic " + std::string(trajectory_name(trajectory)) + " flight, seed " +
                        std::to_string(seed) + ", diverged at step " + std::to_string(k) + ": " +
                        why);
  };
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * params.dt;
    const Reference ref = reference.at(t);
    const StateVector xv = x.to_vector();
    if (!xv.allFinite() || !omega.allFinite()) throw fail(k, "non-finite state");
    if ((x.p - ref.pos).norm() > 20.0 || x.v.norm() > 30.0) throw fail(k, "state out of bounds");
    const double len = (x.p_load - x.p).norm() / params.cable_length;
    if (len < 0.5 || len > 1.5) throw fail(k, "cable length out of bounds");

    const ControlInput u = track(x, omega, ref, params, gains);

    StateVector meas = xv;
    auto noise = [&](double sigma) { return sigma > 0.0 ? sigma * normal(rng) : 0.0; };
    for (int j : {0, 1, 2, 10, 11, 12}) meas[j] += noise(dist.sigma_position);
    for (int j : {3, 4, 5}) meas[j] += noise(dist.sigma_velocity);
    if (dist.sigma_quat > 0.0) {
      for (int j = 6; j < 10; ++j) meas[j] += noise(dist.sigma_quat);
      meas.segment<4>(6).normalize();
    }
    if (!log.states.empty() && meas.segment<4>(6).dot(log.states.back().segment<4>(6)) < 0.0) {
      meas.segment<4>(6) = -meas.segment<4>(6);
    }
    log.t.push_back(t);
    log.states.push_back(meas);
    log.controls.push_back(u.to_vector());
    log.omega_load.push_back(omega);

    const StepResult next = disturbed_step(x, omega, u, params, dist);
    x = next.state;
    omega = next.omega_load;
  }
  return log;
}

void DatasetManifest::save(const std::filesystem::path& path) const {
  nlohmann::ordered_json j;
  j["format"] = "slung-dataset";
  j["version"] = 1;
  j["dt"] = dt;
  j["history"] = history;
  j["horizon"] = horizon;
  j["stride"] = stride;
  j["seed"] = seed;
  j["logs"] = nlohmann::json::array();
  for (const Entry& e : logs) {
    j["logs"].push_back({{"file", e.file}, {"id", e.id}, {"length", e.length},
                         {"split", split_name(e.split)}});
  }
  for (int s = 0; s < 3; ++s) {
    j["windows"][split_name(static_cast<Split>(s))] = windows[s];
    j["achieved"][split_name(static_cast<Split>(s))] = achieved[s];
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path.string());
  out << j.dump(2) << '\n';
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  DatasetManifest m;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    if (j.value("format", "") != "slung-dataset") {
      throw DataError("manifest " + path.string() + ": not a slung dataset");
    }
    m.dt = j.at("dt").get<double>();
    m.history = j.at("history").get<std::size_t>();
    m.horizon = j.at("horizon").get<std::size_t>();
    m.stride = j.value("stride", std::size_t{1});
    m.seed = j.value("seed", std::uint64_t{0});
    for (const auto& e : j.at("logs")) {
      m.logs.push_back({e.at("file").get<std::string>(), e.value("id", ""),
                        e.value("length", std::size_t{0}),
                        split_from_name(e.at("split").get<std::string>())});
    }
    for (int s = 0; s < 3; ++s) {
      const char* name = split_name(static_cast<Split>(s));
      if (j.contains("windows")) m.windows[s] = j["windows"].value(name, std::size_t{0});
      if (j.contains("achieved")) m.achieved[s] = j["achieved"].value(name, 0.0);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest " + path.string() + ": " + e.what());
  }
  if (m.history == 0 || m.horizon == 0 || m.stride == 0) {
    throw DataError("manifest " + path.string() + ": window sizes must be >= 1");
  }
  return m;
}

std::string dataset_hash(const DatasetManifest& manifest, const std::filesystem::path& base_dir) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& e : manifest.logs) {
    std::ifstream in(base_dir / e.file, std::ios::binary);
    if (!in) throw DataError("cannot open log " + (base_dir / e.file).string());
    char buf[1 << 14];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
      for (std::streamsize i = 0; i < in.gcount(); ++i) {
        h ^= static_cast<unsigned char>(buf[i]);
        h *= 0x100000001b3ULL;
      }
    }
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return out;
}

std::vector<FlightLog> load_split(const DatasetManifest& manifest,
                                  const std::filesystem::path& base_dir, Split split,
                                  const LogSchema& schema) {
  std::vector<FlightLog> out;
  for (const auto& e : manifest.logs) {
    if (e.split != split) continue;
    FlightLog log = load_log(base_dir / e.file, schema);
    if (!e.id.empty()) log.id = e.id;
    out.push_back(std::move(log));
  }
  return out;
}

}  // namespace slung

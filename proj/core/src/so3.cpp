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

#include "slung/so3.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace slung {

double UnitQuat::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

UnitQuat UnitQuat::normalized() const {
  const double n = norm();
  if (n == 0.0) {
    throw std::invalid_argument("cannot normalize a zero quaternion");
  }
  return {w / n, x / n, y / n, z / n};
}

Mat3 hat(const Vec3& a) {
  Mat3 m;
  m << 0.0, -a.z(), a.y(),
       a.z(), 0.0, -a.x(),
       -a.y(), a.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& m) {
  return {0.5 * (m(2, 1) - m(1, 2)), 0.5 * (m(0, 2) - m(2, 0)),
          0.5 * (m(1, 0) - m(0, 1))};
}

Mat3 so3_exp(const Vec3& w) {
  const double theta = w.norm();
  const Mat3 k = hat(w);
  if (theta < 1e-12) {
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Mat3::Identity() + a * k + b * k * k;
}

Vec3 so3_log(const Mat3& r) {
  // Go through the quaternion so the near-pi case stays well conditioned.
  const UnitQuat q = rot_to_quat(r);
  const Vec3 xyz(q.x, q.y, q.z);
  const double s = xyz.norm();
  if (s < 1e-12) {
    return 2.0 * xyz;
  }
  const double angle = 2.0 * std::atan2(s, q.w);
  return xyz * (angle / s);
}

UnitQuat quat_mul(const UnitQuat& a, const UnitQuat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

UnitQuat quat_conj(const UnitQuat& q) { return {q.w, -q.x, -q.y, -q.z}; }

UnitQuat quat_inv(const UnitQuat& q) {
  const double n2 = q.dot(q);
  if (n2 == 0.0) {
    throw std::invalid_argument("cannot invert a zero quaternion");
  }
  return {q.w / n2, -q.x / n2, -q.y / n2, -q.z / n2};
}

Mat3 quat_to_rot(const UnitQuat& q) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

UnitQuat rot_to_quat(const Mat3& r) {
  const double ortho_err = (r.transpose() * r - Mat3::Identity()).norm();
  if (!(ortho_err <= 1e-6) || r.determinant() < 0.0) {
    throw std::invalid_argument("rot_to_quat: matrix is not a rotation (|R^T R - I| = " +
                                std::to_string(ortho_err) + ")");
  }
  // Shepperd: pick the largest of 4w^2, 4x^2, 4y^2, 4z^2 as pivot.
  const double tr = r.trace();
  const double d0 = tr, d1 = r(0, 0), d2 = r(1, 1), d3 = r(2, 2);
  UnitQuat q;
  if (d0 >= d1 && d0 >= d2 && d0 >= d3) {
    const double s = 2.0 * std::sqrt(1.0 + tr);
    q = {0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s, (r(1, 0) - r(0, 1)) / s};
  } else if (d1 >= d2 && d1 >= d3) {
    const double s = 2.0 * std::sqrt(1.0 + d1 - d2 - d3);
    q = {(r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s, (r(0, 2) + r(2, 0)) / s};
  } else if (d2 >= d3) {
    const double s = 2.0 * std::sqrt(1.0 + d2 - d1 - d3);
    q = {(r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s, (r(1, 2) + r(2, 1)) / s};
  } else {
    const double s = 2.0 * std::sqrt(1.0 + d3 - d1 - d2);
    q = {(r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s, (r(1, 2) + r(2, 1)) / s, 0.25 * s};
  }
  if (q.w < 0.0) {
    q = -q;
  }
  return q.normalized();
}

UnitQuat quat_exp(const Vec3& w) {
  const double theta = w.norm();
  const double half = 0.5 * theta;
  // sin(theta/2)/theta, with its Taylor series near zero.
  const double k = theta < 1e-8 ? 0.5 - theta * theta / 48.0 : std::sin(half) / theta;
  return {std::cos(half), k * w.x(), k * w.y(), k * w.z()};
}

Vec4 quat_error(const UnitQuat& q1, const UnitQuat& q2) {
  const UnitQuat d = quat_mul(q1, quat_inv(q2));
  return {d.w - 1.0, d.x, d.y, d.z};
}

Vec3 rotate(const UnitQuat& q, const Vec3& v) { return quat_to_rot(q) * v; }

}  // namespace slung

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

#ifndef SLUNG_SO3_HPP_
#define SLUNG_SO3_HPP_

#include <Eigen/Dense>

namespace slung {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix<double, 3, 3, Eigen::RowMajor>;

// Quaternion in Hamilton convention, stored scalar-first (w, x, y, z).
// Values coming out of rot_to_quat / normalized() have unit norm; raw network
// outputs are allowed to be off the unit sphere.
struct UnitQuat {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static UnitQuat identity() { return {}; }
  static UnitQuat from_vec(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }

  Vec4 as_vec() const { return {w, x, y, z}; }
  double norm() const;
  double dot(const UnitQuat& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }
  UnitQuat normalized() const;
  UnitQuat operator-() const { return {-w, -x, -y, -z}; }
};

// Skew-symmetric matrix with hat(a) * b == a.cross(b).
Mat3 hat(const Vec3& a);

// Inverse of hat for (approximately) skew-symmetric input.
Vec3 vee(const Mat3& m);

// exp(hat(w)) via Rodrigues' formula; second-order Taylor below 1e-12 rad.
Mat3 so3_exp(const Vec3& w);

// Rotation vector of R, angle in [0, pi].
Vec3 so3_log(const Mat3& r);

UnitQuat quat_mul(const UnitQuat& a, const UnitQuat& b);
UnitQuat quat_conj(const UnitQuat& q);
// q^-1 = conj(q) / |q|^2.
UnitQuat quat_inv(const UnitQuat& q);
Mat3 quat_to_rot(const UnitQuat& q);

// Shepperd's method. Throws std::invalid_argument if |R^T R - I| > 1e-6 or
// det(R) < 0. The result lies in the w >= 0 hemisphere.
UnitQuat rot_to_quat(const Mat3& r);

// Quaternion with the same rotation as so3_exp(w).
UnitQuat quat_exp(const Vec3& w);

// Attitude error map q1 (x) q2^-1 - q_id. Not antipodally invariant.
Vec4 quat_error(const UnitQuat& q1, const UnitQuat& q2);

// Rotate v by q (assumes unit q).
Vec3 rotate(const UnitQuat& q, const Vec3& v);

}  // namespace slung

#endif  // SLUNG_SO3_HPP_

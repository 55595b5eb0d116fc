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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace slung {
namespace {

constexpr double kPi = std::numbers::pi;

Vec3 random_vec(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> d(-scale, scale);
  return {d(rng), d(rng), d(rng)};
}

UnitQuat random_quat(std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  return UnitQuat{d(rng), d(rng), d(rng), d(rng)}.normalized();
}

// Truncated power series of the matrix exponential, independent of Rodrigues.
Mat3 series_exp(const Mat3& a) {
  Mat3 sum = Mat3::Identity();
  Mat3 term = Mat3::Identity();
  for (int k = 1; k < 40; ++k) {
    term = (term * a / static_cast<double>(k)).eval();
    sum += term;
  }
  return sum;
}

// Rotation by conjugation q (0, v) q*, independent of quat_to_rot.
Vec3 conjugate_rotate(const UnitQuat& q, const Vec3& v) {
  const UnitQuat pure{0.0, v.x(), v.y(), v.z()};
  const UnitQuat r = quat_mul(quat_mul(q, pure), quat_conj(q));
  return {r.x, r.y, r.z};
}

TEST(Hat, MatchesCrossProduct) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const Vec3 a = random_vec(rng, 3.0), b = random_vec(rng, 3.0);
    EXPECT_LT((hat(a) * b - a.cross(b)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((hat(a) + hat(a).transpose()).norm(), 1e-15);
  }
}

TEST(Hat, Examples) {
  EXPECT_EQ(hat(Vec3::UnitX()) * Vec3::UnitY(), Vec3::UnitZ());
  EXPECT_EQ(hat(Vec3(1, 2, 3)) * Vec3(1, 2, 3), Vec3::Zero());
  Mat3 expected;
  expected << 0, -3, 2, 3, 0, -1, -2, 1, 0;
  EXPECT_EQ(hat(Vec3(1, 2, 3)), expected);
  EXPECT_EQ(vee(expected), Vec3(1, 2, 3));
}

TEST(So3Exp, ZeroAndQuarterTurn) {
  EXPECT_EQ(so3_exp(Vec3::Zero()), Mat3::Identity());
  const Vec3 e2 = so3_exp(Vec3(0, 0, kPi / 2)) * Vec3::UnitX();
  EXPECT_LT((e2 - Vec3::UnitY()).norm(), 1e-15);
}

TEST(So3Exp, AgreesWithSeriesAndIsOrthogonal) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const Vec3 w = random_vec(rng, 3.0);
    const Mat3 r = so3_exp(w);
    EXPECT_LT((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
    EXPECT_LT((r - series_exp(hat(w))).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(So3Exp, TinyAngleFallback) {
  const Vec3 w(1e-13, -2e-13, 5e-14);
  EXPECT_LT((so3_exp(w) - series_exp(hat(w))).cwiseAbs().maxCoeff(), 1e-20);
}

TEST(So3Log, InvertsExp) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    // Inside the principal ball |w| < pi.
    const Vec3 w = random_vec(rng, 1.5);
    EXPECT_LT((so3_log(so3_exp(w)) - w).norm(), 1e-10);
  }
}

TEST(Quat, InverseAndIdentity) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const UnitQuat q = random_quat(rng);
    const UnitQuat id = quat_mul(q, quat_inv(q));
    EXPECT_NEAR(id.w, 1.0, 1e-15);
    EXPECT_NEAR(std::hypot(id.x, id.y, id.z), 0.0, 1e-15);
  }
  EXPECT_EQ(quat_to_rot(UnitQuat::identity()), Mat3::Identity());
}

TEST(Quat, HamiltonProductTable) {
  const UnitQuat i{0, 1, 0, 0}, j{0, 0, 1, 0}, k{0, 0, 0, 1};
  const UnitQuat ij = quat_mul(i, j);
  EXPECT_EQ(ij.as_vec(), k.as_vec());
  const UnitQuat ji = quat_mul(j, i);
  EXPECT_EQ(ji.as_vec(), (-k).as_vec());
}

TEST(Quat, ToRotMatchesConjugation) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 100; ++i) {
    const UnitQuat q = random_quat(rng);
    const Vec3 v = random_vec(rng, 2.0);
    EXPECT_LT((quat_to_rot(q) * v - conjugate_rotate(q, v)).norm(), 1e-14);
    EXPECT_LT((rotate(q, v) - conjugate_rotate(q, v)).norm(), 1e-14);
  }
}

TEST(Quat, RoundTripCanonicalHemisphere) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 200; ++i) {
    UnitQuat q = random_quat(rng);
    const UnitQuat back = rot_to_quat(quat_to_rot(q));
    EXPECT_GE(back.w, 0.0);
    if (q.w < 0) q = -q;
    EXPECT_LT((back.as_vec() - q.as_vec()).norm(), 1e-12);
    EXPECT_LT((quat_to_rot(back) - quat_to_rot(q)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Quat, HalfTurnAboutZ) {
  const UnitQuat q = rot_to_quat(so3_exp(Vec3(0, 0, kPi)));
  EXPECT_NEAR(q.w, 0.0, 1e-15);
  EXPECT_NEAR(q.x, 0.0, 1e-15);
  EXPECT_NEAR(q.y, 0.0, 1e-15);
  EXPECT_NEAR(std::abs(q.z), 1.0, 1e-15);
}

TEST(Quat, RejectsNonRotation) {
  Mat3 m = Mat3::Identity();
  m(0, 0) = 1.01;
  EXPECT_THROW(rot_to_quat(m), std::invalid_argument);
  EXPECT_THROW(rot_to_quat(-Mat3::Identity()), std::invalid_argument);
}

TEST(QuatExp, MatchesSo3Exp) {
  std::mt19937_64 rng(19);
  for (int i = 0; i < 50; ++i) {
    const Vec3 w = random_vec(rng, 3.0);
    EXPECT_LT((quat_to_rot(quat_exp(w)) - so3_exp(w)).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(QuatError, ZeroOnIdenticalInputs) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 20; ++i) {
    const UnitQuat q = random_quat(rng);
    EXPECT_LT(quat_error(q, q).norm(), 1e-15);
  }
  EXPECT_EQ(quat_error(UnitQuat::identity(), UnitQuat::identity()), Vec4::Zero());
}

TEST(QuatError, QuarterTurnAboutZ) {
  // (c, 0, 0, s) (x) (1, 0, 0, 0)^-1 = (c, 0, 0, s); subtract (1, 0, 0, 0).
  const double c = std::cos(kPi / 4), s = std::sin(kPi / 4);
  const Vec4 e = quat_error(rot_to_quat(so3_exp(Vec3(0, 0, kPi / 2))), UnitQuat::identity());
  EXPECT_NEAR(e[0], c - 1.0, 1e-15);
  EXPECT_NEAR(e[1], 0.0, 1e-15);
  EXPECT_NEAR(e[2], 0.0, 1e-15);
  EXPECT_NEAR(e[3], s, 1e-15);
}

TEST(QuatError, NotAntipodallyInvariant) {
  std::mt19937_64 rng(29);
  const UnitQuat q = random_quat(rng);
  EXPECT_NEAR(quat_error(-q, q)[0], -2.0, 1e-14);
}

}  // namespace
}  // namespace slung

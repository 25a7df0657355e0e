// Copyright 2026 The corod Authors
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

// Exact SO(3)/SE(3) group and algebra operations: retractions (exponential
// and Cayley), their left-trivialized tangents, adjoints, and the local
// boxplus/boxminus operators.
//
// Twists are plain 6-vectors ordered [angular; linear]. All tangent maps in
// this file are left-trivialized: tau(x + h y) = tau(x) * tau(h * dtau(x) y)
// up to O(h^2).

#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace corod {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat4 = Eigen::Matrix4d;
using Twist = Vec6;

// Thrown by log/boxminus when the rotation angle is within 1e-6 of pi.
struct NearAngleCut : std::runtime_error {
  explicit NearAngleCut(const std::string& what) : std::runtime_error(what) {}
};

// Thrown by the Cayley map inverse when (I + x/2) is not invertible.
struct SingularCayley : std::runtime_error {
  explicit SingularCayley(const std::string& what) : std::runtime_error(what) {}
};

enum class Retraction { Exponential, Cayley };

struct Pose {
  Mat3 R = Mat3::Identity();
  Vec3 p = Vec3::Zero();

  static Pose Identity() { return Pose{}; }

  Pose operator*(const Pose& o) const { return Pose{R * o.R, R * o.p + p}; }
  Pose inverse() const { return Pose{R.transpose(), -(R.transpose() * p)}; }
  Vec3 act(const Vec3& x) const { return R * x + p; }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = R;
    m.topRightCorner<3, 1>() = p;
    return m;
  }
};

inline Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

inline Vec3 vee(const Mat3& m) { return Vec3(m(2, 1), m(0, 2), m(1, 0)); }

// 4x4 matrix representation of a twist.
inline Mat4 hat_se3(const Twist& xi) {
  Mat4 m = Mat4::Zero();
  m.topLeftCorner<3, 3>() = hat(xi.head<3>());
  m.topRightCorner<3, 1>() = xi.tail<3>();
  return m;
}

Mat3 exp_so3(const Vec3& w);
Vec3 log_so3(const Mat3& R);  // throws NearAngleCut near theta = pi

Pose exp_se3(const Twist& xi);
Twist log_se3(const Pose& g);  // throws NearAngleCut

Pose cay_se3(const Twist& xi);
Twist cay_inv_se3(const Pose& g);  // throws SingularCayley

Pose retract(Retraction kind, const Twist& xi);
Twist retract_inv(Retraction kind, const Pose& g);

// Group adjoint, Ad = [R, 0; p~ R, R].
Mat6 adjoint_group(const Pose& g);

// Algebra adjoint, ad = [k~, 0; e~, k~].
Mat6 adjoint_algebra(const Twist& xi);

// Left-trivialized tangent of the retraction and its inverse.
Mat6 dtau(Retraction kind, const Twist& xi);
Mat6 dtau_inv(Retraction kind, const Twist& xi);

// Series forms, truncated at `order` powers of ad (exponential map only).
Mat6 dexp_series(const Twist& xi, int order = 12);
Mat6 dexp_inv_series(const Twist& xi, int order = 12);

inline Pose boxplus(Retraction kind, const Pose& g, const Twist& v) {
  return g * retract(kind, v);
}

inline Twist boxminus(Retraction kind, const Pose& g2, const Pose& g1) {
  return retract_inv(kind, g1.inverse() * g2);
}

inline Pose boxplus(const Pose& g, const Twist& v) {
  return boxplus(Retraction::Exponential, g, v);
}

inline Twist boxminus(const Pose& g2, const Pose& g1) {
  return boxminus(Retraction::Exponential, g2, g1);
}

}  // namespace corod

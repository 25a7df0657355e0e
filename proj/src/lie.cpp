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

#include "corod/lie.hpp"

#include <cmath>

namespace corod {

namespace {

constexpr double kSmallAngle = 1e-6;
constexpr double kAngleCut = M_PI - 1e-6;
// Below this the trig forms of alpha/beta/gamma lose digits to cancellation
// in 1 - cos t; the 4-term series is exact to machine precision there.
constexpr double kSeriesAngle = 0.02;

// alpha = (1-cos t)/t^2, beta = (t-sin t)/t^3.
double alpha_fn(double t) {
  if (t < kSeriesAngle) {
    double t2 = t * t;
    return 0.5 - t2 / 24.0 + t2 * t2 / 720.0 - t2 * t2 * t2 / 40320.0;
  }
  return (1.0 - std::cos(t)) / (t * t);
}

double beta_fn(double t) {
  if (t < kSeriesAngle) {
    double t2 = t * t;
    return 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0 - t2 * t2 * t2 / 362880.0;
  }
  return (t - std::sin(t)) / (t * t * t);
}

// gamma for the inverse of the SO(3) left Jacobian:
// J(w)^-1 = I - w~/2 + gamma w~^2.
double gamma_fn(double t) {
  if (t < kSeriesAngle) {
    double t2 = t * t;
    return 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0 + t2 * t2 * t2 / 1209600.0;
  }
  return (1.0 - 0.5 * t * std::sin(t) / (1.0 - std::cos(t))) / (t * t);
}

// V(w) = I + alpha w~ + beta w~^2, the SO(3) left Jacobian (translation
// factor of the SE(3) exponential).
Mat3 vmat(const Vec3& w) {
  double t = w.norm();
  Mat3 W = hat(w);
  return Mat3::Identity() + alpha_fn(t) * W + beta_fn(t) * W * W;
}

Mat3 vmat_inv(const Vec3& w) {
  double t = w.norm();
  Mat3 W = hat(w);
  return Mat3::Identity() - 0.5 * W + gamma_fn(t) * W * W;
}

// Translation coupling block of the SE(3) left Jacobian, after Barfoot.
// Arguments: rho = translation part, phi = rotation part.
Mat3 jac_q_block(const Vec3& rho, const Vec3& phi) {
  double t = phi.norm();
  Mat3 P = hat(phi);
  Mat3 Rh = hat(rho);
  double c1 = beta_fn(t);  // (t - sin t)/t^3
  double c2, c3;
  if (t < 0.02) {
    double t2 = t * t;
    c2 = -1.0 / 24.0 + t2 / 720.0 - t2 * t2 / 40320.0;
    double c4 = -1.0 / 120.0 + t2 / 5040.0 - t2 * t2 / 362880.0;
    c3 = c2 - 3.0 * c4;
  } else {
    double t2 = t * t;
    c2 = (1.0 - 0.5 * t2 - std::cos(t)) / (t2 * t2);
    c3 = c2 - 3.0 * (t - std::sin(t) - t2 * t / 6.0) / (t2 * t2 * t);
  }
  Mat3 PR = P * Rh, RP = Rh * P;
  Mat3 PRP = PR * P;
  return 0.5 * Rh + c1 * (PR + RP + PRP) - c2 * (P * PR + RP * P - 3.0 * PRP) -
         0.5 * c3 * (PRP * P + P * PRP);
}

Mat6 dcay_sandwich(const Mat4& A, const Mat4& B) {
  // Maps y -> vee(A * hat(y) * B) column by column.
  Mat6 out;
  for (int j = 0; j < 6; ++j) {
    Twist e = Twist::Zero();
    e(j) = 1.0;
    Mat4 m = A * hat_se3(e) * B;
    Mat3 S = 0.5 * (m.topLeftCorner<3, 3>() - m.topLeftCorner<3, 3>().transpose().eval());
    out.col(j).head<3>() = vee(S);
    out.col(j).tail<3>() = m.topRightCorner<3, 1>();
  }
  return out;
}

}  // namespace

Mat3 exp_so3(const Vec3& w) {
  double t = w.norm();
  Mat3 W = hat(w);
  if (t < kSmallAngle) {
    return Mat3::Identity() + W + 0.5 * W * W;
  }
  return Mat3::Identity() + std::sin(t) / t * W + alpha_fn(t) * W * W;
}

Vec3 log_so3(const Mat3& R) {
  double c = std::clamp((R.trace() - 1.0) * 0.5, -1.0, 1.0);
  double t = std::acos(c);
  if (t >= kAngleCut) {
    throw NearAngleCut("log_so3: rotation angle within 1e-6 of pi");
  }
  Vec3 axial = vee(0.5 * (R - R.transpose().eval()));
  if (t < kSmallAngle) {
    return axial;  // sin t / t == 1 to machine precision here
  }
  if (t > 3.0) {
    // Near pi the axial part is ill-conditioned; recover the axis from the
    // symmetric part and orient it with the axial part.
    Mat3 S = 0.5 * (R + R.transpose().eval());
    Vec3 n;
    for (int i = 0; i < 3; ++i) n(i) = std::sqrt(std::max(0.0, (S(i, i) - c) / (1.0 - c)));
    int k = 0;
    n.cwiseAbs().maxCoeff(&k);
    for (int i = 0; i < 3; ++i) {
      if (i != k) n(i) = std::copysign(n(i), S(i, k));
    }
    if (n.dot(axial) < 0.0) n = -n;
    return t * n.normalized();
  }
  return t / std::sin(t) * axial;
}

Pose exp_se3(const Twist& xi) {
  Vec3 w = xi.head<3>();
  return Pose{exp_so3(w), vmat(w) * xi.tail<3>()};
}

Twist log_se3(const Pose& g) {
  Twist xi;
  xi.head<3>() = log_so3(g.R);
  xi.tail<3>() = vmat_inv(xi.head<3>()) * g.p;
  return xi;
}

Pose cay_se3(const Twist& xi) {
  Vec3 w = xi.head<3>();
  Mat3 W = hat(w);
  double scale = 1.0 / (1.0 + 0.25 * w.squaredNorm());
  Mat3 R = Mat3::Identity() + scale * (W + 0.5 * W * W);
  Mat3 a_minus_inv = (Mat3::Identity() - 0.5 * W).inverse();
  return Pose{R, a_minus_inv * xi.tail<3>()};
}

Twist cay_inv_se3(const Pose& g) {
  Mat3 rpi = g.R + Mat3::Identity();
  if (std::abs(rpi.determinant()) < 1e-12) {
    throw SingularCayley("cay_inv_se3: R + I singular (angle at pi)");
  }
  Mat3 W = 2.0 * (g.R - Mat3::Identity()) * rpi.inverse();
  Vec3 w = vee(0.5 * (W - W.transpose().eval()));
  Twist xi;
  xi.head<3>() = w;
  xi.tail<3>() = (Mat3::Identity() - 0.5 * hat(w)) * g.p;
  return xi;
}

Pose retract(Retraction kind, const Twist& xi) {
  return kind == Retraction::Exponential ? exp_se3(xi) : cay_se3(xi);
}

Twist retract_inv(Retraction kind, const Pose& g) {
  return kind == Retraction::Exponential ? log_se3(g) : cay_inv_se3(g);
}

Mat6 adjoint_group(const Pose& g) {
  Mat6 ad = Mat6::Zero();
  ad.topLeftCorner<3, 3>() = g.R;
  ad.bottomRightCorner<3, 3>() = g.R;
  ad.bottomLeftCorner<3, 3>() = hat(g.p) * g.R;
  return ad;
}

Mat6 adjoint_algebra(const Twist& xi) {
  Mat6 ad = Mat6::Zero();
  Mat3 K = hat(xi.head<3>());
  ad.topLeftCorner<3, 3>() = K;
  ad.bottomRightCorner<3, 3>() = K;
  ad.bottomLeftCorner<3, 3>() = hat(xi.tail<3>());
  return ad;
}

Mat6 dtau(Retraction kind, const Twist& xi) {
  if (kind == Retraction::Cayley) {
    Mat4 ap = Mat4::Identity() + 0.5 * hat_se3(xi);
    Mat4 am = Mat4::Identity() - 0.5 * hat_se3(xi);
    return dcay_sandwich(ap.inverse(), am.inverse());
  }
  // Left-trivialized dexp: [V(-k), 0; Q(-e,-k), V(-k)].
  Vec3 w = -xi.head<3>();
  Mat3 V = vmat(w);
  Mat6 d = Mat6::Zero();
  d.topLeftCorner<3, 3>() = V;
  d.bottomRightCorner<3, 3>() = V;
  d.bottomLeftCorner<3, 3>() = jac_q_block(-xi.tail<3>(), w);
  return d;
}

Mat6 dtau_inv(Retraction kind, const Twist& xi) {
  if (kind == Retraction::Cayley) {
    Mat4 ap = Mat4::Identity() + 0.5 * hat_se3(xi);
    Mat4 am = Mat4::Identity() - 0.5 * hat_se3(xi);
    return dcay_sandwich(ap, am);
  }
  Vec3 w = -xi.head<3>();
  Mat3 Vi = vmat_inv(w);
  Mat3 Q = jac_q_block(-xi.tail<3>(), w);
  Mat6 d = Mat6::Zero();
  d.topLeftCorner<3, 3>() = Vi;
  d.bottomRightCorner<3, 3>() = Vi;
  d.bottomLeftCorner<3, 3>() = -Vi * Q * Vi;
  return d;
}

Mat6 dexp_series(const Twist& xi, int order) {
  Mat6 nad = -adjoint_algebra(xi);
  Mat6 term = Mat6::Identity();
  Mat6 sum = Mat6::Identity();  // n = 0 term, coefficient 1/1!
  double fact = 1.0;
  for (int n = 1; n <= order; ++n) {
    term = term * nad;
    fact *= static_cast<double>(n + 1);
    sum += term / fact;
  }
  return sum;
}

Mat6 dexp_inv_series(const Twist& xi, int order) {
  static const double bernoulli[] = {1.0,        -0.5, 1.0 / 6.0,  0.0, -1.0 / 30.0, 0.0,
                                     1.0 / 42.0, 0.0,  -1.0 / 30.0, 0.0, 5.0 / 66.0, 0.0,
                                     -691.0 / 2730.0};
  Mat6 nad = -adjoint_algebra(xi);
  Mat6 term = Mat6::Identity();
  Mat6 sum = Mat6::Identity();
  double fact = 1.0;
  int maxn = std::min<int>(order, 12);
  for (int n = 1; n <= maxn; ++n) {
    term = term * nad;
    fact *= static_cast<double>(n);
    if (bernoulli[n] != 0.0) sum += (bernoulli[n] / fact) * term;
  }
  return sum;
}

}  // namespace corod

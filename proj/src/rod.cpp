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

#include "corod/rod.hpp"

#include <cmath>

namespace corod {

namespace {

Mat6 ad_inv_of(Retraction kind, const Twist& u) {
  return adjoint_group(retract(kind, u).inverse());
}

Vec6 vee_se3(const Mat4& m) {
  Vec6 out;
  Mat3 S = 0.5 * (m.topLeftCorner<3, 3>() - m.topLeftCorner<3, 3>().transpose().eval());
  out.head<3>() = vee(S);
  out.tail<3>() = m.topRightCorner<3, 1>();
  return out;
}

// Q_i(s) = Bbar_i(s) dtau(Bbar_i(s) Psi_i).
Mat6 q_mat(Retraction kind, const Twist& psi, double bbar) {
  return bbar * dtau(kind, Twist(bbar * psi));
}

// d/du of [u_scale * dcay_{U}] for U = u twists moving with rate dU; shared
// by the arclength and time derivatives of the Cayley Q operator.
Mat6 dcay_scaled_deriv(const Twist& u, const Twist& du, double scale, double dscale) {
  Mat4 U = hat_se3(u);
  Mat4 dU = hat_se3(du);
  Mat4 ap_inv = (Mat4::Identity() + 0.5 * U).inverse();
  Mat4 am_inv = (Mat4::Identity() - 0.5 * U).inverse();
  Mat6 out;
  for (int c = 0; c < 6; ++c) {
    Twist e = Twist::Zero();
    e(c) = 1.0;
    Mat4 Y = hat_se3(e);
    Mat4 dc = ap_inv * Y * am_inv;
    Mat4 term = -ap_inv * (0.5 * dU) * dc + dc * (0.5 * dU) * am_inv;
    out.col(c) = vee_se3(scale * term + dscale * dc);
  }
  return out;
}

// d/ds of q_mat. For the exponential this collapses to Bbar' Ad^-1; for the
// Cayley map use the product rule on the sandwich form.
Mat6 qprime_mat(Retraction kind, const Twist& psi, double bbar, double dbbar) {
  if (kind == Retraction::Exponential) {
    return dbbar * ad_inv_of(kind, Twist(bbar * psi));
  }
  return dcay_scaled_deriv(Twist(bbar * psi), Twist(dbbar * psi), bbar, dbbar);
}

// Time derivative of q_mat at fixed s when psi moves with rate psidot
// (Cayley only; the exponential path accumulates the bracket integral).
Mat6 qdot_mat_cayley(const Twist& psi, const Twist& psidot, double bbar) {
  return dcay_scaled_deriv(Twist(bbar * psi), Twist(bbar * psidot), bbar, 0.0);
}

constexpr double kGridTol = 1e-12;

}  // namespace

ControlNet::ControlNet(NetKind kind, Retraction retraction, KnotVector knots,
                       std::vector<Pose> poses)
    : kind_(kind), retraction_(retraction), knots_(std::move(knots)), poses_(std::move(poses)) {
  if (static_cast<int>(poses_.size()) != knots_.control_count())
    throw std::invalid_argument("ControlNet: pose count does not match knot vector");
  psi_.resize(poses_.size(), Twist::Zero());
  refresh(1);
}

void ControlNet::refresh(int from) {
  for (int i = std::max(1, from); i < count(); ++i) {
    Twist d = boxminus(retraction_, poses_[static_cast<size_t>(i)],
                       poses_[static_cast<size_t>(i - 1)]);
    if (d.head<3>().norm() >= M_PI - 1e-3)
      throw NearAngleCut("ControlNet: increment angle too close to pi");
    psi_[static_cast<size_t>(i)] = d;
  }
}

void ControlNet::set_pose(int i, const Pose& g) {
  poses_[static_cast<size_t>(i)] = g;
  refresh(i);
}

void ControlNet::set_poses(std::vector<Pose> poses) {
  if (poses.size() != poses_.size())
    throw std::invalid_argument("ControlNet: pose count change not allowed");
  poses_ = std::move(poses);
  refresh(1);
}

void ControlNet::perturb(int i, const Twist& v) {
  set_pose(i, boxplus(retraction_, poses_[static_cast<size_t>(i)], v));
}

ControlNet hermite_as_bspline(Retraction retraction, const Pose& ga, const Pose& gb,
                              const Twist& xia, const Twist& xib) {
  KnotVector kv(3, {0, 0, 0, 0, 1, 1, 1, 1});
  std::vector<Pose> poses = {ga, boxplus(retraction, ga, Twist(xia / 3.0)),
                             boxplus(retraction, gb, Twist(-xib / 3.0)), gb};
  return ControlNet(NetKind::SE3, retraction, std::move(kv), std::move(poses));
}

std::vector<double> greville_abscissae(const KnotVector& kv) {
  const auto& t = kv.knots();
  const int k = kv.degree();
  std::vector<double> out;
  for (int i = 0; i < kv.control_count(); ++i) {
    double sum = 0.0;
    for (int j = 1; j <= k; ++j) sum += t[static_cast<size_t>(i + j)];
    out.push_back(sum / k);
  }
  return out;
}

ControlNet net_from_curve(NetKind kind, Retraction retraction, KnotVector kv,
                          const std::function<Pose(double)>& curve) {
  std::vector<Pose> poses;
  for (double s : greville_abscissae(kv)) poses.push_back(curve(s));
  return ControlNet(kind, retraction, std::move(kv), std::move(poses));
}

ControlNet straight_rod_net(Retraction retraction, int degree, int count, double length,
                            const Pose& base) {
  return net_from_curve(NetKind::SE3, retraction,
                        KnotVector::clamped_uniform(degree, count, length),
                        [&](double s) {
                          Pose g = base;
                          g.p += base.R * Vec3(s, 0, 0);
                          return g;
                        });
}

Pose eval_pose(const ControlNet& net, double s) {
  BasisEval e = eval_basis(net.knots(), s);
  Pose g = net.pose(e.base);
  for (int i = e.base + 1; i <= e.span; ++i) {
    g = g * retract(net.retraction(), Twist(e.bbar(i) * net.psi(i)));
  }
  return g;
}

Twist eval_strain(const ControlNet& net, double s) {
  BasisEval e = eval_basis(net.knots(), s);
  Twist xi = Twist::Zero();
  for (int i = e.base + 1; i <= e.span; ++i) {
    Twist u = e.bbar(i) * net.psi(i);
    xi = ad_inv_of(net.retraction(), u) * xi +
         dtau(net.retraction(), u) * Twist(e.dbbar(i) * net.psi(i));
  }
  return xi;
}

PointKinematics eval_point(const ControlNet& net, double s, bool with_jacobians) {
  const Retraction kind = net.retraction();
  BasisEval e = eval_basis(net.knots(), s);
  PointKinematics out;
  out.s = s;
  out.base = e.base;
  out.span = e.span;
  out.g = net.pose(e.base);
  const int k = e.degree;
  if (with_jacobians) {
    out.J.assign(static_cast<size_t>(k + 1), Mat6::Zero());
    out.Jp.assign(static_cast<size_t>(k + 1), Mat6::Zero());
    out.J[0] = Mat6::Identity();
  }
  for (int m = 1; m <= k; ++m) {
    int i = e.base + m;
    const Twist& psi = net.psi(i);
    double bb = e.bbar(i), dbb = e.dbbar(i);
    Twist u = bb * psi;
    Mat6 Adl = ad_inv_of(kind, u);
    Twist v = dtau(kind, u) * Twist(dbb * psi);
    out.xi = Adl * out.xi + v;
    out.g = out.g * retract(kind, u);
    if (!with_jacobians) continue;
    Mat6 adv = adjoint_algebra(v);
    for (int l = 0; l < m; ++l) {
      Mat6 AdJ = Adl * out.J[static_cast<size_t>(l)];
      out.Jp[static_cast<size_t>(l)] = Adl * out.Jp[static_cast<size_t>(l)] - adv * AdJ;
      out.J[static_cast<size_t>(l)] = AdJ;
    }
    Mat6 Dinv = dtau_inv(kind, psi);
    Mat6 Qi = q_mat(kind, psi, bb);
    Mat6 Qip = qprime_mat(kind, psi, bb, dbb);
    Mat6 AdPsiInv = ad_inv_of(kind, psi);
    out.J[static_cast<size_t>(m)] = Qi * Dinv;
    out.J[static_cast<size_t>(m - 1)] -= Qi * Dinv * AdPsiInv;
    out.Jp[static_cast<size_t>(m)] = Qip * Dinv;
    out.Jp[static_cast<size_t>(m - 1)] -= Qip * Dinv * AdPsiInv;
  }
  return out;
}

double RodGeometry::area(double s) const {
  double r = radius(s);
  return M_PI * r * r;
}

Mat6 RodGeometry::hooke(double s) const {
  double r = radius(s);
  double a = M_PI * r * r;
  double j2 = M_PI * r * r * r * r / 4.0;
  double j1 = 2.0 * j2;
  double g = shear_modulus();
  Mat6 k = Mat6::Zero();
  k.diagonal() << g * j1, young_modulus * j2, young_modulus * j2, young_modulus * a, g * a,
      g * a;
  return k;
}

Mat6 RodGeometry::viscous(double s) const {
  double r = radius(s);
  double a = M_PI * r * r;
  double j2 = M_PI * r * r * r * r / 4.0;
  double j1 = 2.0 * j2;
  Mat6 u = Mat6::Zero();
  u.diagonal() << viscosity * j1, viscosity * j2, viscosity * j2, viscosity * a, viscosity * a,
      viscosity * a;
  return u;
}

Mat6 RodGeometry::mass_density(double s) const {
  double r = radius(s);
  double a = M_PI * r * r;
  double j2 = M_PI * r * r * r * r / 4.0;
  double j1 = 2.0 * j2;
  Mat6 m = Mat6::Zero();
  m.diagonal() << density * j1, density * j2, density * j2, density * a, density * a,
      density * a;
  return m;
}

SampleGrid SampleGrid::for_knots(const KnotVector& kv, int per_span) {
  SampleGrid grid;
  std::vector<double> bp = kv.breakpoints();
  grid.s.push_back(bp.front());
  for (size_t b = 0; b + 1 < bp.size(); ++b) {
    double a = bp[b], c = bp[b + 1];
    for (int m = 1; m <= per_span; ++m)
      grid.s.push_back(a + (c - a) * static_cast<double>(m) / per_span);
  }
  grid.w.assign(grid.s.size(), 0.0);
  for (size_t m = 0; m + 1 < grid.s.size(); ++m) {
    double h = grid.s[m + 1] - grid.s[m];
    grid.w[m] += 0.5 * h;
    grid.w[m + 1] += 0.5 * h;
  }
  return grid;
}

const Mat6& KinematicField::q_of(size_t sample, int i) const {
  const Sample& sm = samples[sample];
  if (i <= sm.base) return A[static_cast<size_t>(i)];
  return sm.Q[static_cast<size_t>(i - sm.base - 1)];
}

KinematicField forward_pass(const ControlNet& net, const SampleGrid& grid) {
  const KnotVector& kv = net.knots();
  const Retraction kind = net.retraction();
  const int k = kv.degree();
  const int n = net.count() - 1;

  // Every knot breakpoint must be a sample: the Q_i accumulators saturate
  // exactly at support ends, and A_i is captured there.
  std::vector<double> bp = kv.breakpoints();
  for (double b : bp) {
    bool found = false;
    for (double s : grid.s) {
      if (std::abs(s - b) <= kGridTol * (1.0 + std::abs(b))) {
        found = true;
        break;
      }
    }
    if (!found) throw GridMisaligned("sample grid must contain every knot");
  }
  for (size_t m = 0; m + 1 < grid.s.size(); ++m) {
    if (!(grid.s[m + 1] > grid.s[m]))
      throw GridMisaligned("sample grid must be strictly increasing");
  }

  KinematicField field;
  field.grid = grid;
  field.degree = k;
  field.A.assign(static_cast<size_t>(n + 1), Mat6::Identity());
  field.Adot.assign(static_cast<size_t>(n + 1), Mat6::Zero());
  field.psi_dot.assign(static_cast<size_t>(n + 1), Twist::Zero());
  field.psi_ddot.assign(static_cast<size_t>(n + 1), Twist::Zero());
  field.samples.resize(grid.size());

  std::vector<BasisEval> be;
  be.reserve(grid.size());
  for (double s : grid.s) be.push_back(eval_basis(kv, s));

  for (size_t m = 0; m < grid.size(); ++m) {
    KinematicField::Sample& sm = field.samples[m];
    sm.base = be[m].base;
    sm.span = be[m].span;
    PointKinematics pk = eval_point(net, grid.s[m], false);
    sm.g = pk.g;
    sm.xi = pk.xi;
    sm.Q.assign(static_cast<size_t>(k), Mat6::Zero());
    sm.Qp.assign(static_cast<size_t>(k), Mat6::Zero());
    sm.Qdot.assign(static_cast<size_t>(k), Mat6::Zero());
    for (int i = sm.base + 1; i <= sm.span; ++i) {
      if (i < 1) continue;
      sm.Qp[static_cast<size_t>(i - sm.base - 1)] =
          qprime_mat(kind, net.psi(i), be[m].bbar(i), be[m].dbbar(i));
    }
  }

  if (kind == Retraction::Cayley) {
    // The accumulation identity is specific to the exponential; the Cayley
    // operator has a direct closed form.
    for (size_t m = 0; m < grid.size(); ++m) {
      KinematicField::Sample& sm = field.samples[m];
      for (int i = sm.base + 1; i <= sm.span; ++i) {
        if (i < 1) continue;
        sm.Q[static_cast<size_t>(i - sm.base - 1)] = q_mat(kind, net.psi(i), be[m].bbar(i));
      }
    }
    for (int i = 1; i <= n; ++i)
      field.A[static_cast<size_t>(i)] = q_mat(kind, net.psi(i), 1.0);
    return field;
  }

  // Accumulate Q_i along the arc over its support, one panel at a time
  // (composite Simpson per panel keeps the single-sweep structure while
  // meeting the A_i cross-check tolerance).
  for (int i = 1; i <= n; ++i) {
    const Twist& psi = net.psi(i);
    double lo = kv.knots()[static_cast<size_t>(i)];
    double hi = kv.knots()[static_cast<size_t>(i + k)];
    Mat6 acc = Mat6::Zero();
    auto f = [&](double x) -> Mat6 {
      BasisEval e = eval_basis(kv, x);
      return ad_inv_of(kind, Twist(e.bbar(i) * psi)) * e.dbbar(i);
    };
    for (size_t m = 0; m + 1 < grid.size(); ++m) {
      double a = grid.s[m], b = grid.s[m + 1];
      if (b <= lo + kGridTol || a >= hi - kGridTol) {
        // outside the rising support; value stays 0 before and A_i after
      } else {
        double h = b - a;
        acc += (h / 6.0) * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
      }
      KinematicField::Sample& sm = field.samples[m + 1];
      if (i >= sm.base + 1 && i <= sm.span) {
        sm.Q[static_cast<size_t>(i - sm.base - 1)] = acc;
      }
    }
    field.A[static_cast<size_t>(i)] = q_mat(kind, psi, 1.0);
    if (hi > lo + kGridTol) field.A[static_cast<size_t>(i)] = acc;
  }
  return field;
}

void backward_quantities(KinematicField& field, const ControlNet& net,
                         const std::vector<Twist>& eta_ctrl,
                         const std::vector<Twist>& etadot_ctrl) {
  const KnotVector& kv = net.knots();
  const Retraction kind = net.retraction();
  const int k = kv.degree();
  const int n = net.count() - 1;
  if (field.samples.empty()) throw MissingForwardPass("forward_pass must run first");
  if (static_cast<int>(eta_ctrl.size()) != n + 1 ||
      static_cast<int>(etadot_ctrl.size()) != n + 1)
    throw std::invalid_argument("backward_quantities: control velocity count mismatch");

  for (int i = 1; i <= n; ++i) {
    Mat6 AdPsiInv = ad_inv_of(kind, net.psi(i));
    Twist rhs = eta_ctrl[static_cast<size_t>(i)] - AdPsiInv * eta_ctrl[static_cast<size_t>(i - 1)];
    field.psi_dot[static_cast<size_t>(i)] =
        field.A[static_cast<size_t>(i)].partialPivLu().solve(rhs);
  }

  // Qdot_i accumulates the bracket of the running Q_i against the same
  // kernel; the running value enters through the closed form. The Cayley
  // operator differentiates directly instead.
  if (kind == Retraction::Cayley) {
    std::vector<BasisEval> bec;
    bec.reserve(field.grid.size());
    for (double s : field.grid.s) bec.push_back(eval_basis(kv, s));
    for (size_t m = 0; m < field.grid.size(); ++m) {
      KinematicField::Sample& sm = field.samples[m];
      for (int i = sm.base + 1; i <= sm.span; ++i) {
        if (i < 1) continue;
        sm.Qdot[static_cast<size_t>(i - sm.base - 1)] = qdot_mat_cayley(
            net.psi(i), field.psi_dot[static_cast<size_t>(i)], bec[m].bbar(i));
      }
    }
    for (int i = 1; i <= n; ++i)
      field.Adot[static_cast<size_t>(i)] =
          qdot_mat_cayley(net.psi(i), field.psi_dot[static_cast<size_t>(i)], 1.0);
  } else {
    for (int i = 1; i <= n; ++i) {
      const Twist& psi = net.psi(i);
      const Twist& pd = field.psi_dot[static_cast<size_t>(i)];
      double lo = kv.knots()[static_cast<size_t>(i)];
      double hi = kv.knots()[static_cast<size_t>(i + k)];
      auto f = [&](double x) -> Mat6 {
        BasisEval e = eval_basis(kv, x);
        Twist qpsidot = q_mat(kind, psi, e.bbar(i)) * pd;
        return -adjoint_algebra(qpsidot) * ad_inv_of(kind, Twist(e.bbar(i) * psi)) *
               e.dbbar(i);
      };
      Mat6 acc = Mat6::Zero();
      for (size_t m = 0; m + 1 < field.grid.size(); ++m) {
        double a = field.grid.s[m], b = field.grid.s[m + 1];
        if (!(b <= lo + kGridTol || a >= hi - kGridTol)) {
          double h = b - a;
          acc += (h / 6.0) * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
        }
        KinematicField::Sample& sm = field.samples[m + 1];
        if (i >= sm.base + 1 && i <= sm.span)
          sm.Qdot[static_cast<size_t>(i - sm.base - 1)] = acc;
      }
      field.Adot[static_cast<size_t>(i)] = acc;
    }
  }

  for (int i = 1; i <= n; ++i) {
    Mat6 AdPsiInv = ad_inv_of(kind, net.psi(i));
    Twist a_pd = field.A[static_cast<size_t>(i)] * field.psi_dot[static_cast<size_t>(i)];
    Twist rhs = -field.Adot[static_cast<size_t>(i)] * field.psi_dot[static_cast<size_t>(i)] +
                etadot_ctrl[static_cast<size_t>(i)] +
                adjoint_algebra(a_pd) * (AdPsiInv * eta_ctrl[static_cast<size_t>(i - 1)]) -
                AdPsiInv * etadot_ctrl[static_cast<size_t>(i - 1)];
    field.psi_ddot[static_cast<size_t>(i)] =
        field.A[static_cast<size_t>(i)].partialPivLu().solve(rhs);
  }

  std::vector<BasisEval> be;
  be.reserve(field.grid.size());
  for (double s : field.grid.s) be.push_back(eval_basis(kv, s));

  // The discrete identity eta(s) = sum_i J_i(s) eta_i holds exactly when the
  // Jacobian blocks reuse the accumulated A_i rather than the closed form.
  std::vector<Mat6> a_inv(static_cast<size_t>(n + 1), Mat6::Identity());
  for (int i = 1; i <= n; ++i)
    a_inv[static_cast<size_t>(i)] = field.A[static_cast<size_t>(i)].inverse();

  for (size_t m = 0; m < field.grid.size(); ++m) {
    KinematicField::Sample& sm = field.samples[m];
    sm.J.assign(static_cast<size_t>(k + 1), Mat6::Zero());
    sm.Jp.assign(static_cast<size_t>(k + 1), Mat6::Zero());
    sm.J[0] = Mat6::Identity();
    sm.eta = eta_ctrl[static_cast<size_t>(sm.base)];
    sm.etadot = etadot_ctrl[static_cast<size_t>(sm.base)];
    for (int mm = 1; mm <= k; ++mm) {
      int i = sm.base + mm;
      const Twist& psi = net.psi(i);
      double bb = be[m].bbar(i), dbb = be[m].dbbar(i);
      Twist u = bb * psi;
      Mat6 Adl = ad_inv_of(kind, u);
      Twist v = dtau(kind, u) * Twist(dbb * psi);
      const Mat6& Qi = sm.Q[static_cast<size_t>(mm - 1)];
      const Mat6& Qip = sm.Qp[static_cast<size_t>(mm - 1)];
      const Mat6& Qid = sm.Qdot[static_cast<size_t>(mm - 1)];
      const Twist& pd = field.psi_dot[static_cast<size_t>(i)];

      Twist transported = Adl * sm.eta;
      Twist q_pd = Qi * pd;
      sm.etadot = -adjoint_algebra(q_pd) * transported + Adl * sm.etadot + Qid * pd +
                  Qi * field.psi_ddot[static_cast<size_t>(i)];
      sm.eta = transported + q_pd;

      Mat6 adv = adjoint_algebra(v);
      for (int l = 0; l < mm; ++l) {
        Mat6 AdJ = Adl * sm.J[static_cast<size_t>(l)];
        sm.Jp[static_cast<size_t>(l)] = Adl * sm.Jp[static_cast<size_t>(l)] - adv * AdJ;
        sm.J[static_cast<size_t>(l)] = AdJ;
      }
      const Mat6& Dinv = a_inv[static_cast<size_t>(i)];
      Mat6 AdPsiInv = ad_inv_of(kind, psi);
      sm.J[static_cast<size_t>(mm)] = Qi * Dinv;
      sm.J[static_cast<size_t>(mm - 1)] -= Qi * Dinv * AdPsiInv;
      sm.Jp[static_cast<size_t>(mm)] = Qip * Dinv;
      sm.Jp[static_cast<size_t>(mm - 1)] -= Qip * Dinv * AdPsiInv;
    }
  }
  field.velocities_done = true;
}

}  // namespace corod

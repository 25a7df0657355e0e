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

#include "corod/oracles.hpp"

#include <cmath>
#include <limits>

namespace corod {

namespace {

struct RodState {
  Twist sigma = Twist::Zero();  // local exponential coordinate of g
  Twist lambda = Twist::Zero();
};

// One RKMK4 step of the coupled (g, Lambda) system over [s, s+h], with g
// represented as g_m exp(sigma) so the rotation stays on the group exactly.
void rk_step(const ShootingProblem& prob, double s, double h, Pose& g, Twist& lambda) {
  auto f = [&](double x, const RodState& y) -> RodState {
    Pose gx = g * exp_se3(y.sigma);
    Twist xi = prob.geom.rest_strain(x) +
               Twist(prob.geom.hooke(x).inverse() * y.lambda);
    RodState d;
    d.sigma = dtau_inv(Retraction::Exponential, y.sigma) * xi;
    d.lambda = adjoint_algebra(xi).transpose() * y.lambda;
    if (prob.distributed) d.lambda -= prob.distributed(x, gx);
    return d;
  };
  RodState y0;
  y0.lambda = lambda;
  RodState k1 = f(s, y0);
  RodState y2{Twist(0.5 * h * k1.sigma), Twist(lambda + 0.5 * h * k1.lambda)};
  RodState k2 = f(s + 0.5 * h, y2);
  RodState y3{Twist(0.5 * h * k2.sigma), Twist(lambda + 0.5 * h * k2.lambda)};
  RodState k3 = f(s + 0.5 * h, y3);
  RodState y4{Twist(h * k3.sigma), Twist(lambda + h * k3.lambda)};
  RodState k4 = f(s + h, y4);
  Twist sigma = h / 6.0 * (k1.sigma + 2.0 * k2.sigma + 2.0 * k3.sigma + k4.sigma);
  lambda += h / 6.0 * (k1.lambda + 2.0 * k2.lambda + 2.0 * k3.lambda + k4.lambda);
  g = g * exp_se3(sigma);
}

struct IvpOut {
  std::vector<Pose> g;
  std::vector<Twist> lambda;
};

IvpOut integrate(const ShootingProblem& prob, const Twist& lambda0,
                 const std::vector<double>& stations) {
  IvpOut out;
  Pose g = prob.base;
  Twist lam = lambda0;
  out.g.push_back(g);
  out.lambda.push_back(lam);
  double L = prob.geom.length;
  for (size_t m = 0; m + 1 < stations.size(); ++m) {
    double a = stations[m], b = stations[m + 1];
    int sub = std::max(1, static_cast<int>(std::ceil(prob.steps * (b - a) / L)));
    double h = (b - a) / sub;
    for (int q = 0; q < sub; ++q) rk_step(prob, a + q * h, h, g, lam);
    out.g.push_back(g);
    out.lambda.push_back(lam);
  }
  return out;
}

}  // namespace

ShootingResult shoot_static(const ShootingProblem& prob,
                            const std::vector<double>& stations) {
  if (stations.size() < 2 || std::abs(stations.front()) > 1e-12 ||
      std::abs(stations.back() - prob.geom.length) > 1e-9)
    throw std::invalid_argument("shoot_static: stations must span [0, L]");

  std::vector<double> ends = {stations.front(), stations.back()};
  Twist lam0 = prob.lambda0_guess;
  double last_residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it < prob.max_newton; ++it) {
    IvpOut ivp = integrate(prob, lam0, ends);
    Twist r = ivp.lambda.back() - prob.tip_wrench(ivp.g.back());
    last_residual = r.norm();
    if (last_residual < prob.tolerance) {
      IvpOut dense = integrate(prob, lam0, stations);
      ShootingResult res;
      res.s = stations;
      res.g = std::move(dense.g);
      res.lambda = std::move(dense.lambda);
      res.lambda0 = lam0;
      res.newton_iterations = it;
      return res;
    }
    Mat6 Jr;
    double fd = 1e-7 * std::max(1.0, lam0.norm());
    for (int c = 0; c < 6; ++c) {
      Twist lp = lam0, lm = lam0;
      lp(c) += fd;
      lm(c) -= fd;
      IvpOut op = integrate(prob, lp, ends);
      IvpOut om = integrate(prob, lm, ends);
      Twist rp = op.lambda.back() - prob.tip_wrench(op.g.back());
      Twist rm = om.lambda.back() - prob.tip_wrench(om.g.back());
      Jr.col(c) = (rp - rm) / (2.0 * fd);
    }
    Twist step = Jr.partialPivLu().solve(Twist(-r));
    // Backtracking keeps the iteration from overshooting on the
    // large-deformation cases.
    double scale = 1.0;
    for (int ls = 0; ls < 30; ++ls) {
      IvpOut trial = integrate(prob, Twist(lam0 + scale * step), ends);
      Twist rt = trial.lambda.back() - prob.tip_wrench(trial.g.back());
      if (rt.norm() < last_residual) break;
      scale *= 0.5;
    }
    lam0 += scale * step;
  }
  throw ShootingDiverged("shoot_static: no convergence, residual " +
                         std::to_string(last_residual));
}

namespace {

// Integrate theta'' = lambda sin(theta) from 0 to ell with classic RK4.
void pendulum_integrate(double lambda, double ell, int steps, double theta0, double u0,
                        double& theta_end, double& u_end) {
  double th = theta0, u = u0;
  double h = ell / steps;
  auto acc = [lambda](double t) { return lambda * std::sin(t); };
  for (int m = 0; m < steps; ++m) {
    double k1t = u, k1u = acc(th);
    double k2t = u + 0.5 * h * k1u, k2u = acc(th + 0.5 * h * k1t);
    double k3t = u + 0.5 * h * k2u, k3u = acc(th + 0.5 * h * k2t);
    double k4t = u + h * k3u, k4u = acc(th + h * k3t);
    th += h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t);
    u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
  }
  theta_end = th;
  u_end = u;
}

// Shoot on u = theta'(0) for a fixed input angle.
bool pendulum_shoot(const SnappingProblem& p, double alpha, double& u, double& theta_out) {
  for (int it = 0; it < 60; ++it) {
    double th_end, u_end;
    pendulum_integrate(p.lambda, p.ell, p.steps, alpha + p.beta * u, u, th_end, u_end);
    if (std::abs(u_end) < 1e-11) {
      theta_out = th_end;
      return true;
    }
    double fd = 1e-6 * std::max(1.0, std::abs(u));
    double dum, ue_p, ue_m;
    pendulum_integrate(p.lambda, p.ell, p.steps, alpha + p.beta * (u + fd), u + fd, dum,
                       ue_p);
    pendulum_integrate(p.lambda, p.ell, p.steps, alpha + p.beta * (u - fd), u - fd, dum,
                       ue_m);
    double slope = (ue_p - ue_m) / (2.0 * fd);
    if (std::abs(slope) < 1e-14) return false;
    double step = -u_end / slope;
    // Past the fold the Newton steps stop contracting; treat as no solution
    // on this branch.
    if (std::abs(step) > 50.0) return false;
    u += step;
  }
  return false;
}

}  // namespace

double SnappingCurve::stable_output(double alpha) const {
  auto eval_lower = [this](double a) {
    if (a <= input.front()) return output.front();
    for (size_t m = 0; m + 1 < input.size(); ++m) {
      if (a >= input[m] && a <= input[m + 1]) {
        double t = (a - input[m]) / (input[m + 1] - input[m]);
        return (1.0 - t) * output[m] + t * output[m + 1];
      }
    }
    return output.back();
  };
  if (!has_fold || alpha <= fold_input) return eval_lower(alpha);
  // theta -> 2pi - theta maps solutions to solutions, so the upper branch
  // mirrors the lower one through (pi, pi).
  return 2.0 * M_PI - eval_lower(2.0 * M_PI - alpha);
}

SnappingCurve solve_snapping_bvp(const SnappingProblem& prob) {
  SnappingCurve curve;
  double u = 0.0;
  double alpha_good = 0.0, alpha_bad = -1.0;
  for (int m = 0; m <= prob.sweep_points; ++m) {
    double alpha = 2.0 * M_PI * m / prob.sweep_points;
    double u_trial = u, theta_out;
    if (pendulum_shoot(prob, alpha, u_trial, theta_out)) {
      u = u_trial;
      curve.input.push_back(alpha);
      curve.output.push_back(theta_out);
      alpha_good = alpha;
    } else {
      alpha_bad = alpha;
      break;
    }
  }
  if (alpha_bad > 0.0) {
    double lo = alpha_good, hi = alpha_bad;
    double u_lo = u;
    while (hi - lo > prob.fold_tolerance) {
      double mid = 0.5 * (lo + hi);
      double u_trial = u_lo, theta_out;
      if (pendulum_shoot(prob, mid, u_trial, theta_out)) {
        lo = mid;
        u_lo = u_trial;
        curve.input.push_back(mid);
        curve.output.push_back(theta_out);
      } else {
        hi = mid;
      }
    }
    curve.fold_input = 0.5 * (lo + hi);
    curve.has_fold = true;
  }
  return curve;
}

std::vector<Twist> fd_gradient(const std::function<double(const std::vector<Pose>&)>& f,
                               const std::vector<Pose>& poses, double h, Retraction kind) {
  std::vector<Twist> grad(poses.size(), Twist::Zero());
  for (size_t i = 0; i < poses.size(); ++i) {
    for (int c = 0; c < 6; ++c) {
      Twist dir = Twist::Zero();
      dir(c) = 1.0;
      std::vector<Pose> plus = poses, minus = poses;
      plus[i] = boxplus(kind, poses[i], Twist(h * dir));
      minus[i] = boxplus(kind, poses[i], Twist(-h * dir));
      grad[i](c) = (f(plus) - f(minus)) / (2.0 * h);
    }
  }
  return grad;
}

}  // namespace corod

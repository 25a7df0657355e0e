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

// Independent ground-truth solvers used in tests and validation: a shooting
// solver for the static rod boundary value problem, the torsional pendulum
// BVP behind concentric-tube snapping, and finite-difference utilities.
//
// These share lie-core but deliberately nothing from rod kinematics or the
// statics solver.

#pragma once

#include <functional>

#include "corod/lie.hpp"
#include "corod/rod.hpp"

namespace corod {

struct ShootingDiverged : std::runtime_error {
  explicit ShootingDiverged(const std::string& what) : std::runtime_error(what) {}
};
struct FoldNotBracketed : std::runtime_error {
  explicit FoldNotBracketed(const std::string& what) : std::runtime_error(what) {}
};

// Static Cosserat rod as an initial value problem in the internal wrench:
//   g' = g xi^,  Lambda' = ad_xi^T Lambda - Fbar,  xi = xi0 + K^-1 Lambda,
// shot on Lambda(0) until Lambda(L) matches the tip wrench.
struct ShootingProblem {
  RodGeometry geom;
  Pose base;
  // Body-frame tip wrench as a function of the tip pose (covers follower and
  // spatial load conventions).
  std::function<Twist(const Pose&)> tip_wrench = [](const Pose&) { return Twist::Zero(); };
  // Body-frame distributed wrench per unit length, or empty.
  std::function<Twist(double, const Pose&)> distributed;
  int steps = 2000;
  double tolerance = 1e-10;
  int max_newton = 60;
  Twist lambda0_guess = Twist::Zero();
};

struct ShootingResult {
  std::vector<double> s;
  std::vector<Pose> g;
  std::vector<Twist> lambda;
  Twist lambda0 = Twist::Zero();
  int newton_iterations = 0;
};

// Integrates through the given stations (must start at 0 and end at L).
ShootingResult shoot_static(const ShootingProblem& prob, const std::vector<double>& stations);

// theta'' = lambda sin(theta) on [0, ell], theta(0) = alpha - beta theta'(0),
// theta'(ell) = 0. Traced over the input angle by shooting on theta'(0) with
// warm-started continuation; the fold is bisected on the input angle.
struct SnappingProblem {
  double lambda = 37.8;
  double beta = 0.21;
  double ell = 0.23;
  int sweep_points = 240;
  int steps = 600;
  double fold_tolerance = 1e-3;
};

struct SnappingCurve {
  std::vector<double> input;   // lower branch, ascending
  std::vector<double> output;  // theta at the far end of the overlap
  double fold_input = -1.0;    // input angle of the fold, or -1 if none
  bool has_fold = false;

  // Output on the branch a quasi-static sweep follows: lower branch before
  // the fold, mirrored upper branch after it.
  double stable_output(double alpha) const;
};

SnappingCurve solve_snapping_bvp(const SnappingProblem& prob);

// Central differences of a scalar field over a pose set, taken along
// retraction directions.
std::vector<Twist> fd_gradient(const std::function<double(const std::vector<Pose>&)>& f,
                               const std::vector<Pose>& poses, double h,
                               Retraction kind = Retraction::Exponential);

}  // namespace corod

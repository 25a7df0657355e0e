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

// Potential energy, left-trivialized gradient, tangent stiffness, and the
// damped Riemannian Newton / KKT loop for constrained static equilibrium.

#pragma once

#include <optional>

#include "corod/linsolve.hpp"
#include "corod/multibody.hpp"

namespace corod {

struct DegenerateSegment : std::runtime_error {
  explicit DegenerateSegment(const std::string& what) : std::runtime_error(what) {}
};

enum class WrenchFrame { Body, Spatial };

// Concentrated wrench [moment; force] at a body end.
struct TipWrench {
  std::string body;
  BodyEnd end = BodyEnd::Tail;
  Twist wrench = Twist::Zero();
  WrenchFrame frame = WrenchFrame::Body;
};

// Concentrated wrench at an arclength station of a rod.
struct PointWrench {
  std::string rod;
  double s = 0.0;
  Twist wrench = Twist::Zero();
  WrenchFrame frame = WrenchFrame::Spatial;
};

// Constant distributed wrench per unit length over one rod.
struct DistributedWrench {
  std::string rod;
  Twist wrench = Twist::Zero();
  WrenchFrame frame = WrenchFrame::Spatial;
};

struct CableAttachment {
  std::string body;
  BodyEnd end = BodyEnd::Tail;
  Vec3 point = Vec3::Zero();  // attachment point in the body frame
};

// Tension routed through ordered via points; consecutive attachments get the
// equal-and-opposite force pair along their chord.
struct Cable {
  double tension = 0.0;
  std::vector<CableAttachment> via;
};

struct LoadSet {
  std::optional<Vec3> gravity;
  std::vector<TipWrench> tip_wrenches;
  std::vector<PointWrench> point_wrenches;
  std::vector<DistributedWrench> distributed;
  std::vector<Cable> cables;
  // Generalized forces applied directly to joint coordinate slots.
  std::vector<std::pair<std::string, double>> joint_forces;
};

struct NewtonSettings {
  double damping = -1.0;  // < 0: 1e-6 trace(K_t)/N, raised tenfold on failure
  double tol_residual = 1e-9;
  double tol_constraint = 1e-9;
  int max_iterations = 50;
  bool line_search = true;
  int max_halvings = 20;
  bool force_dense = false;
  bool force_sparse = false;
  // Once full steps are being accepted, a finite-difference exact Hessian
  // joins the candidate directions (quadratic tail convergence); disabled
  // for systems larger than this.
  int exact_newton_max_dof = 200;
};

enum class SolveStatus { Converged, MaxIterationsExceeded, SingularSystem };

struct IterationRecord {
  int iteration = 0;
  double residual_norm = 0.0;
  double constraint_norm = 0.0;
  double energy = 0.0;
  double step_scale = 0.0;
};

struct StaticResult {
  SolveStatus status = SolveStatus::Converged;
  int iterations = 0;
  double residual_norm = 0.0;
  double constraint_norm = 0.0;
  double energy = 0.0;
  Eigen::VectorXd multipliers;
  std::vector<IterationRecord> trace;
};

// One full evaluation of the static system at the current configuration.
struct StaticEval {
  double energy = 0.0;  // internal + conservative load potentials
  double internal_energy = 0.0;
  Eigen::VectorXd gradient;                      // residual r
  std::vector<Eigen::Triplet<double>> stiffness;  // tangent stiffness K_t
  Eigen::VectorXd b;
  std::vector<Eigen::Triplet<double>> A;
};

StaticEval assemble_static(Assembly& assembly, const LoadSet& loads,
                           bool with_stiffness = true);

double internal_energy(Assembly& assembly);
double potential_energy(Assembly& assembly, const LoadSet& loads);

// Cable force pairs resolved against the current configuration: per
// attachment, the body-frame wrench at its owner frame.
struct CableWrench {
  std::string body;
  BodyEnd end;
  Twist wrench;  // body frame of the attachment owner
};
std::vector<CableWrench> cable_wrenches(Assembly& assembly, const Cable& cable);

StaticResult solve_static(Assembly& assembly, const LoadSet& loads,
                          const NewtonSettings& settings = {});

}  // namespace corod

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

// Discrete-Lagrangian symplectic time stepping on SE(3) with constraints,
// plus a dissipative implicit-Euler reference integrator.

#pragma once

#include "corod/statics.hpp"

namespace corod {

struct InnerNewtonDiverged : std::runtime_error {
  explicit InnerNewtonDiverged(const std::string& what) : std::runtime_error(what) {}
};
struct ConstraintDriftExceeded : std::runtime_error {
  explicit ConstraintDriftExceeded(const std::string& what) : std::runtime_error(what) {}
};
struct NewtonDiverged : std::runtime_error {
  explicit NewtonDiverged(const std::string& what) : std::runtime_error(what) {}
};

enum class Integrator { Symplectic, ImplicitEuler };

struct DynamicsSettings {
  double dt = 0.01;
  double inner_tolerance = 1e-11;
  int max_inner = 30;
  double tol_constraint = 1e-9;
  double drift_factor = 10.0;
  bool force_dense = false;
  bool force_sparse = false;
};

struct EnergySample {
  double t = 0.0;
  double kinetic = 0.0;
  double potential = 0.0;
  double total = 0.0;
  Pose tip;
};

// Time stepper bound to one assembly. Owns the control velocities and the
// transported discrete momenta between steps.
class TimeStepper {
 public:
  TimeStepper(Assembly& assembly, DynamicsSettings settings);

  void set_velocity(const Eigen::VectorXd& qdot);
  const Eigen::VectorXd& velocity() const { return qdot_; }
  double time() const { return t_; }

  // One symplectic DEL step under the given loads.
  void del_step(const LoadSet& loads);
  // One backward-Euler step on the same semi-discrete equations.
  void implicit_euler_step(const LoadSet& loads);

  // Kinetic/potential/total energy at the current state.
  EnergySample measure(const LoadSet& loads, const std::string& tip_body) const;

 private:
  struct MassSystem {
    std::vector<Eigen::Triplet<double>> mass;     // generalized mass
    std::vector<Eigen::Triplet<double>> damping;  // viscous matrix
    bool has_damping = false;
  };
  MassSystem assemble_mass(const std::vector<QuadPoint>& pts) const;

  Assembly* assembly_;
  DynamicsSettings settings_;
  double t_ = 0.0;
  Eigen::VectorXd qdot_;
  Eigen::VectorXd lambda_;
  bool primed_ = false;             // momenta valid
  std::vector<Twist> momenta_;      // per quad point, transported
  std::vector<Twist> rigid_momenta_;  // per rigid body with inertia
  Eigen::VectorXd force_prev_;      // potential gradient at the last midpoint
};

struct SimulationSchedule {
  int steps = 0;
  double dt = 0.01;
  Integrator integrator = Integrator::Symplectic;
  std::string tip_body;
  std::function<LoadSet(double)> loads_at;  // defaults to empty loads
};

std::vector<EnergySample> simulate(Assembly& assembly, const SimulationSchedule& schedule,
                                   const Eigen::VectorXd& qdot0 = Eigen::VectorXd(),
                                   DynamicsSettings settings = {});

}  // namespace corod

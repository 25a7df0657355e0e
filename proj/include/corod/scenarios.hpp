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

// Built-in validation scenarios: each builds its scene, runs the experiment,
// measures against its expected numbers, and reports pass/fail per check.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "corod/dynamics.hpp"
#include "corod/multibody.hpp"
#include "corod/oracles.hpp"
#include "corod/statics.hpp"

namespace corod::scenarios {

struct Check {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double limit = 0.0;  // bound the measurement is held against
  std::string note;
};

struct SuiteReport {
  std::string suite;
  std::vector<Check> checks;
  double wall_seconds = 0.0;

  bool passed() const {
    for (const Check& c : checks)
      if (!c.passed) return false;
    return true;
  }
};

// Cantilever accuracy against the shooting oracle: tip forces
// {0.25..1.0} N and tip moments {0.05..0.2} N m, per-point relative error
// below 1%, plus the Newton convergence behavior of the 0.25 N case.
SuiteReport run_cantilever(const std::string& out_dir = "");

// Configuration error vs control count for degrees 2..5.
SuiteReport run_convergence(const std::string& out_dir = "");

// Long-horizon energy behavior of the symplectic integrator vs the
// implicit-Euler baseline on the release oscillation.
SuiteReport run_energy(const std::string& out_dir = "");

// Quasi-static concentric-tube rotation sweep against the pendulum BVP.
SuiteReport run_snapping(const std::string& out_dir = "");

// Parallel soft-rigid mechanism: KKT dimension, sparse-vs-dense solve,
// pre-twist force-strain ordering.
SuiteReport run_parallel(const std::string& out_dir = "");

// Condensed per-module property pack (finite-difference and invariant
// checks used by the acceptance gate's property criterion).
SuiteReport run_properties();

SuiteReport run_suite(const std::string& name, const std::string& out_dir = "");

// Quasi-static sweep utility: warm-started static solves over a scalar
// schedule, with jump detection.
struct SweepResult {
  std::vector<double> parameter;
  std::vector<double> output;
  bool jump_detected = false;
  double jump_parameter = 0.0;
  int failed_at = -1;  // schedule index of the first failed solve, or -1
};
SweepResult sweep_quasi_static(Assembly& assembly, const std::vector<double>& schedule,
                               const std::function<void(double)>& apply_parameter,
                               const std::function<LoadSet(double)>& loads_at,
                               const std::function<double()>& measure,
                               const NewtonSettings& settings = {},
                               double jump_threshold = 0.5);

}  // namespace corod::scenarios

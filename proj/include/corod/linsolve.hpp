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

// Symmetric saddle-point (KKT) solve: sparse LDLT on the quasi-definite
// regularized system with iterative refinement, dense LU fallback below the
// size threshold.

#pragma once

#include <Eigen/Sparse>

#include <stdexcept>
#include <vector>

#include "corod/lie.hpp"

namespace corod {

struct SingularKKT : std::runtime_error {
  explicit SingularKKT(const std::string& what) : std::runtime_error(what) {}
};

struct KKTSystem {
  int n = 0;  // primal unknowns
  int m = 0;  // multipliers
  std::vector<Eigen::Triplet<double>> H;  // n x n, symmetric
  std::vector<Eigen::Triplet<double>> A;  // m x n
  Eigen::VectorXd r;  // length n
  Eigen::VectorXd b;  // length m
};

struct KKTSolution {
  Eigen::VectorXd sigma;  // length n
  Eigen::VectorXd mu;     // length m
  bool dense = false;
  double residual = 0.0;  // relative backsubstitution residual
};

// Solves [H, A^T; A, 0] [sigma; mu] = [-r; -b].
KKTSolution solve_kkt(const KKTSystem& sys, bool force_dense = false,
                      bool force_sparse = false);

}  // namespace corod

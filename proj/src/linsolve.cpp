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

#include "corod/linsolve.hpp"

#include <Eigen/SparseCholesky>

namespace corod {

namespace {
constexpr int kDenseThreshold = 600;
}

KKTSolution solve_kkt(const KKTSystem& sys, bool force_dense, bool force_sparse) {
  const int n = sys.n, m = sys.m, N = n + m;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(sys.H.size() + 2 * sys.A.size() + static_cast<size_t>(m));
  double hscale = 1.0;
  for (const auto& t : sys.H) {
    trips.emplace_back(t.row(), t.col(), t.value());
    hscale = std::max(hscale, std::abs(t.value()));
  }
  for (const auto& t : sys.A) {
    trips.emplace_back(n + t.row(), t.col(), t.value());
    trips.emplace_back(t.col(), n + t.row(), t.value());
  }

  Eigen::VectorXd rhs(N);
  rhs.head(n) = -sys.r;
  rhs.tail(m) = -sys.b;

  Eigen::SparseMatrix<double> K(N, N);
  K.setFromTriplets(trips.begin(), trips.end());

  KKTSolution sol;
  Eigen::VectorXd x;
  bool dense = force_dense || (!force_sparse && N < kDenseThreshold);
  if (dense) {
    Eigen::MatrixXd Kd(K);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Kd);
    x = lu.solve(rhs);
    double err = (Kd * x - rhs).norm();
    if (!x.allFinite() || err > 1e-6 * std::max(1.0, rhs.norm()))
      throw SingularKKT("dense KKT solve failed");
    // one refinement pass
    x += lu.solve(rhs - Kd * x);
    sol.dense = true;
  } else {
    // Quasi-definite regularization of the zero block makes the LDLT
    // factorization exist without 2x2 pivoting; refinement removes the
    // perturbation from the solution.
    double delta = 1e-10 * hscale;
    std::vector<Eigen::Triplet<double>> reg = trips;
    for (int i = 0; i < m; ++i) reg.emplace_back(n + i, n + i, -delta);
    Eigen::SparseMatrix<double> Kreg(N, N);
    Kreg.setFromTriplets(reg.begin(), reg.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Kreg);
    if (ldlt.info() != Eigen::Success) throw SingularKKT("sparse LDLT factorization failed");
    x = ldlt.solve(rhs);
    for (int pass = 0; pass < 3; ++pass) {
      Eigen::VectorXd resid = rhs - K * x;
      x += ldlt.solve(resid);
    }
    if (!x.allFinite()) throw SingularKKT("sparse KKT solve produced non-finite values");
  }
  sol.residual = (K * x - rhs).norm() / std::max(1.0, rhs.norm());
  if (sol.residual > 1e-6) throw SingularKKT("KKT solve residual too large");
  sol.sigma = x.head(n);
  sol.mu = x.tail(m);
  return sol;
}

}  // namespace corod

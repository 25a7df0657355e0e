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

// Scalar B-spline machinery: Cox-de Boor evaluation with first derivatives,
// cumulative (backward partial sum) bases, and active-span queries.
//
// Only clamped (open) knot vectors are supported: the endpoint interpolation
// property of the cumulative parameterization requires them.

#pragma once

#include <stdexcept>
#include <vector>

namespace corod {

struct OutOfDomain : std::runtime_error {
  explicit OutOfDomain(const std::string& what) : std::runtime_error(what) {}
};

class KnotVector {
 public:
  // Clamped knot vector with uniform interior knots on [0, length].
  static KnotVector clamped_uniform(int degree, int control_count, double length,
                                    double start = 0.0);
  // Arbitrary nondecreasing clamped knots (end multiplicities degree+1).
  KnotVector(int degree, std::vector<double> knots);

  int degree() const { return degree_; }
  int control_count() const { return n_ + 1; }
  const std::vector<double>& knots() const { return knots_; }
  double domain_start() const { return knots_.front(); }
  double domain_end() const { return knots_.back(); }
  double length() const { return knots_.back() - knots_.front(); }

  // Index j of the span [t_j, t_{j+1}) containing s, right-continuous,
  // with the final nonempty span closed at the right end.
  int find_span(double s) const;

  // Breakpoints of the nonempty spans, including both domain ends.
  std::vector<double> breakpoints() const;

 private:
  int degree_ = 0;
  int n_ = 0;  // highest control index
  std::vector<double> knots_;
};

// Basis values over the active window {j-k, ..., j} at one parameter value.
struct BasisEval {
  int span = 0;
  int base = 0;  // = span - degree, first active control index
  int degree = 0;
  // Entry m corresponds to control index base + m, m = 0..degree.
  std::vector<double> value;
  std::vector<double> deriv;
  std::vector<double> cumulative;
  std::vector<double> cumulative_deriv;

  int window_size() const { return degree + 1; }

  // Accessors valid for any control index; outside the window the
  // cumulative basis saturates at 1 (below) or 0 (above).
  double b(int i) const {
    return (i < base || i > span) ? 0.0 : value[static_cast<size_t>(i - base)];
  }
  double db(int i) const {
    return (i < base || i > span) ? 0.0 : deriv[static_cast<size_t>(i - base)];
  }
  double bbar(int i) const {
    if (i < base) return 1.0;
    if (i > span) return 0.0;
    return cumulative[static_cast<size_t>(i - base)];
  }
  double dbbar(int i) const {
    return (i < base || i > span) ? 0.0 : cumulative_deriv[static_cast<size_t>(i - base)];
  }
};

BasisEval eval_basis(const KnotVector& kv, double s);

// Control indices whose increments influence g(s): {j-k, ..., j}.
std::pair<int, int> active_window(const KnotVector& kv, double s);

}  // namespace corod

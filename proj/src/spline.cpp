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

#include "corod/spline.hpp"

#include <algorithm>
#include <cmath>

namespace corod {

namespace {
constexpr double kDomainSlack = 1e-12;
}

KnotVector KnotVector::clamped_uniform(int degree, int control_count, double length,
                                       double start) {
  int n = control_count - 1;
  std::vector<double> t;
  t.reserve(static_cast<size_t>(n + degree + 2));
  int spans = n - degree + 1;
  for (int i = 0; i <= degree; ++i) t.push_back(start);
  for (int i = 1; i < spans; ++i)
    t.push_back(start + length * static_cast<double>(i) / static_cast<double>(spans));
  for (int i = 0; i <= degree; ++i) t.push_back(start + length);
  return KnotVector(degree, std::move(t));
}

KnotVector::KnotVector(int degree, std::vector<double> knots)
    : degree_(degree), knots_(std::move(knots)) {
  if (degree_ < 1) throw std::invalid_argument("KnotVector: degree must be positive");
  int m = static_cast<int>(knots_.size()) - 1;
  n_ = m - degree_ - 1;
  if (n_ < degree_) throw std::invalid_argument("KnotVector: too few knots for degree");
  for (size_t i = 1; i < knots_.size(); ++i) {
    if (knots_[i] < knots_[i - 1])
      throw std::invalid_argument("KnotVector: knots must be nondecreasing");
  }
  for (int i = 0; i <= degree_; ++i) {
    if (knots_[static_cast<size_t>(i)] != knots_.front() ||
        knots_[knots_.size() - 1 - static_cast<size_t>(i)] != knots_.back())
      throw std::invalid_argument("KnotVector: clamped (open) form required");
  }
  if (!(knots_.back() > knots_.front()))
    throw std::invalid_argument("KnotVector: empty parameter domain");
}

int KnotVector::find_span(double s) const {
  if (s < domain_start() - kDomainSlack || s > domain_end() + kDomainSlack)
    throw OutOfDomain("parameter outside knot domain");
  if (s >= knots_[static_cast<size_t>(n_ + 1)]) return n_;
  if (s <= knots_[static_cast<size_t>(degree_)]) return degree_;
  auto it = std::upper_bound(knots_.begin() + degree_, knots_.begin() + n_ + 1, s);
  return static_cast<int>(it - knots_.begin()) - 1;
}

std::vector<double> KnotVector::breakpoints() const {
  std::vector<double> out;
  out.push_back(knots_.front());
  for (int j = degree_; j <= n_; ++j) {
    double a = knots_[static_cast<size_t>(j)], b = knots_[static_cast<size_t>(j + 1)];
    if (b > a) out.push_back(b);
  }
  return out;
}

BasisEval eval_basis(const KnotVector& kv, double s) {
  const int k = kv.degree();
  const auto& t = kv.knots();
  BasisEval out;
  out.degree = k;
  out.span = kv.find_span(s);
  out.base = out.span - k;
  const int j = out.span;

  // Triangular Cox-de Boor table; keep the degree k-1 row for derivatives.
  std::vector<double> N(static_cast<size_t>(k + 1), 0.0);
  std::vector<double> Nprev(static_cast<size_t>(k), 0.0);
  std::vector<double> left(static_cast<size_t>(k + 1)), right(static_cast<size_t>(k + 1));
  N[0] = 1.0;
  for (int d = 1; d <= k; ++d) {
    if (d == k) {
      for (int r = 0; r < k; ++r) Nprev[static_cast<size_t>(r)] = N[static_cast<size_t>(r)];
    }
    left[static_cast<size_t>(d)] = s - t[static_cast<size_t>(j + 1 - d)];
    right[static_cast<size_t>(d)] = t[static_cast<size_t>(j + d)] - s;
    double saved = 0.0;
    for (int r = 0; r < d; ++r) {
      double denom = right[static_cast<size_t>(r + 1)] + left[static_cast<size_t>(d - r)];
      double tmp = N[static_cast<size_t>(r)] / denom;
      N[static_cast<size_t>(r)] = saved + right[static_cast<size_t>(r + 1)] * tmp;
      saved = left[static_cast<size_t>(d - r)] * tmp;
    }
    N[static_cast<size_t>(d)] = saved;
  }

  out.value.assign(N.begin(), N.end());
  out.deriv.assign(static_cast<size_t>(k + 1), 0.0);
  // N'_{i,k} = k [ N_{i,k-1}/(t_{i+k}-t_i) - N_{i+1,k-1}/(t_{i+k+1}-t_{i+1}) ],
  // where the degree k-1 row lives on the window {j-k+1, ..., j}.
  auto nkm1 = [&](int i) -> double {
    int idx = i - (j - k + 1);
    if (idx < 0 || idx >= k) return 0.0;
    return Nprev[static_cast<size_t>(idx)];
  };
  for (int m = 0; m <= k; ++m) {
    int i = out.base + m;
    double a = 0.0, b = 0.0;
    double da = t[static_cast<size_t>(i + k)] - t[static_cast<size_t>(i)];
    double db = t[static_cast<size_t>(i + k + 1)] - t[static_cast<size_t>(i + 1)];
    if (da > 0.0) a = nkm1(i) / da;
    if (db > 0.0) b = nkm1(i + 1) / db;
    out.deriv[static_cast<size_t>(m)] = static_cast<double>(k) * (a - b);
  }

  out.cumulative.assign(static_cast<size_t>(k + 1), 0.0);
  out.cumulative_deriv.assign(static_cast<size_t>(k + 1), 0.0);
  double acc = 0.0, dacc = 0.0;
  for (int m = k; m >= 0; --m) {
    acc += out.value[static_cast<size_t>(m)];
    dacc += out.deriv[static_cast<size_t>(m)];
    out.cumulative[static_cast<size_t>(m)] = acc;
    out.cumulative_deriv[static_cast<size_t>(m)] = dacc;
  }
  return out;
}

std::pair<int, int> active_window(const KnotVector& kv, double s) {
  int j = kv.find_span(s);
  return {j - kv.degree(), j};
}

}  // namespace corod

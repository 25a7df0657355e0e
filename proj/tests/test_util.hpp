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

// Shared helpers for the test suites. Everything here is test-side oracle
// machinery, independent of the library implementation paths it checks.

#pragma once

#include <random>

#include "corod/lie.hpp"

namespace corod::test {

inline std::mt19937& rng() {
  static std::mt19937 gen(20260808u);
  return gen;
}

inline double uniform(double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng());
}

inline Vec3 random_vec3(double scale = 1.0) {
  return Vec3(uniform(-scale, scale), uniform(-scale, scale), uniform(-scale, scale));
}

inline Twist random_twist(double ang_scale = 1.0, double lin_scale = 1.0) {
  Twist x;
  x.head<3>() = random_vec3(ang_scale);
  x.tail<3>() = random_vec3(lin_scale);
  return x;
}

inline Pose random_pose(double ang_scale = 1.0, double lin_scale = 1.0) {
  return exp_se3(random_twist(ang_scale, lin_scale));
}

// Dense matrix exponential by scaling and squaring with a long Taylor tail.
// Used as an independent oracle for Ad(exp(xi)) = expm(ad_xi).
template <typename M>
M expm(M a) {
  int squarings = 0;
  double nrm = a.template lpNorm<Eigen::Infinity>();
  while (nrm > 0.25) {
    a *= 0.5;
    nrm *= 0.5;
    ++squarings;
  }
  M sum = M::Identity(a.rows(), a.cols());
  M term = sum;
  for (int n = 1; n <= 24; ++n) {
    term = term * a / static_cast<double>(n);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

}  // namespace corod::test

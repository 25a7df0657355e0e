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

// Cumulative-parameterization rod kinematics: pose, strain, velocity,
// acceleration, Jacobian and Jacobian-derivative fields from a control net,
// via the two-pass framework (accumulate geometric operators forward, then
// recover velocities and Jacobians).

#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "corod/lie.hpp"
#include "corod/spline.hpp"

namespace corod {

struct GridMisaligned : std::runtime_error {
  explicit GridMisaligned(const std::string& what) : std::runtime_error(what) {}
};
struct MissingForwardPass : std::runtime_error {
  explicit MissingForwardPass(const std::string& what) : std::runtime_error(what) {}
};

enum class NetKind { SE3, SO3Relative };

// Ordered control poses + knot vector + retraction defining one cumulative
// spline. Increments psi[i] = poses[i] (-) poses[i-1] are cached and must
// stay well inside the retraction's injectivity region.
class ControlNet {
 public:
  ControlNet(NetKind kind, Retraction retraction, KnotVector knots,
             std::vector<Pose> poses);

  NetKind kind() const { return kind_; }
  Retraction retraction() const { return retraction_; }
  const KnotVector& knots() const { return knots_; }
  int count() const { return static_cast<int>(poses_.size()); }
  const Pose& pose(int i) const { return poses_[static_cast<size_t>(i)]; }
  const std::vector<Pose>& poses() const { return poses_; }
  const Twist& psi(int i) const { return psi_[static_cast<size_t>(i)]; }

  void set_pose(int i, const Pose& g);
  void set_poses(std::vector<Pose> poses);
  // Retraction update of one control pose, g_i <- g_i (+) v.
  void perturb(int i, const Twist& v);

 private:
  void refresh(int from);

  NetKind kind_;
  Retraction retraction_;
  KnotVector knots_;
  std::vector<Pose> poses_;
  std::vector<Twist> psi_;  // psi_[0] unused
};

// Hermite segment on [0, 1] as a cumulative cubic B-spline: end poses ga, gb
// and end strains xia, xib (derivatives w.r.t. the unit parameter).
ControlNet hermite_as_bspline(Retraction retraction, const Pose& ga, const Pose& gb,
                              const Twist& xia, const Twist& xib);

// Greville abscissae of a knot vector: control poses placed there reproduce
// affine functions of arclength exactly.
std::vector<double> greville_abscissae(const KnotVector& kv);

// Net sampling a pose curve at the Greville points. A straight stress-free
// rod is net_from_curve with the geodesic s -> base * exp(s e4).
ControlNet net_from_curve(NetKind kind, Retraction retraction, KnotVector kv,
                          const std::function<Pose(double)>& curve);
ControlNet straight_rod_net(Retraction retraction, int degree, int count, double length,
                            const Pose& base = Pose::Identity());

Pose eval_pose(const ControlNet& net, double s);
Twist eval_strain(const ControlNet& net, double s);

// One-point kinematics for solver assembly: exact strain, Jacobian blocks
// J_i and their arclength derivatives over the active window.
struct PointKinematics {
  double s = 0.0;
  Pose g;
  Twist xi = Twist::Zero();
  int base = 0, span = 0;
  std::vector<Mat6> J, Jp;  // entry m is control index base + m
};
PointKinematics eval_point(const ControlNet& net, double s, bool with_jacobians = true);

// Cross-section and material description of one rod. Radius varies linearly
// from the front (s = 0) to the rear end.
struct RodGeometry {
  double length = 1.0;
  double radius_front = 0.01;
  double radius_rear = 0.01;
  double young_modulus = 1e6;
  double poisson_ratio = 0.45;
  double viscosity = 0.0;       // Pa s
  double density = 1000.0;      // kg/m^3; the paper leaves this unspecified
  Twist reference_strain = (Twist() << 0, 0, 0, 1, 0, 0).finished();
  std::function<Twist(double)> reference_strain_fn;  // optional override

  double radius(double s) const {
    return radius_front + (radius_rear - radius_front) * s / length;
  }
  double area(double s) const;
  double shear_modulus() const { return young_modulus / (2.0 * (1.0 + poisson_ratio)); }
  // diag(G J1, E J2, E J3, E A, G A, G A)
  Mat6 hooke(double s) const;
  // diag(mu J1, mu J2, mu J3, mu A, mu A, mu A)
  Mat6 viscous(double s) const;
  // diag(rho J1, rho J2, rho J3, rho A, rho A, rho A)
  Mat6 mass_density(double s) const;
  Twist rest_strain(double s) const {
    return reference_strain_fn ? reference_strain_fn(s) : reference_strain;
  }
};

// Ordered arclength samples aligned with the knot breakpoints, plus
// composite trapezoid weights.
struct SampleGrid {
  std::vector<double> s;
  std::vector<double> w;

  static SampleGrid for_knots(const KnotVector& kv, int per_span = 8);
  size_t size() const { return s.size(); }
};

struct KinematicField {
  struct Sample {
    Pose g;
    Twist xi = Twist::Zero();
    int base = 0, span = 0;
    // Entry m corresponds to increment index base + 1 + m, m = 0..degree-1.
    std::vector<Mat6> Q, Qp, Qdot;
    // Entry m corresponds to control index base + m, m = 0..degree.
    std::vector<Mat6> J, Jp;
    Twist eta = Twist::Zero();
    Twist etadot = Twist::Zero();
  };

  SampleGrid grid;
  int degree = 0;
  std::vector<Sample> samples;
  std::vector<Mat6> A;     // A[i] = Q_i at its support end; A[0] unused
  std::vector<Mat6> Adot;  // time derivative of A, filled by the second pass
  std::vector<Twist> psi_dot, psi_ddot;
  bool velocities_done = false;

  const Mat6& q_of(size_t sample, int i) const;  // Q_i at a sample (A_i once saturated)
};

// First pass: sweep s = 0..L once, filling poses, strains and the Q_i
// accumulators; captures A_i at each support end.
KinematicField forward_pass(const ControlNet& net, const SampleGrid& grid);

// Second pass: control velocities/accelerations in, velocity, acceleration,
// Jacobian and Jacobian-derivative fields out.
void backward_quantities(KinematicField& field, const ControlNet& net,
                         const std::vector<Twist>& eta_ctrl,
                         const std::vector<Twist>& etadot_ctrl);

}  // namespace corod

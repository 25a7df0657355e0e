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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "corod/oracles.hpp"
#include "corod/statics.hpp"
#include "test_util.hpp"

using namespace corod;
using namespace corod::test;

namespace {

RodGeometry paper_71_geometry() {
  RodGeometry g;
  g.length = 1.0;
  g.radius_front = 0.03;
  g.radius_rear = 0.015;
  g.young_modulus = 2e5;
  g.poisson_ratio = 0.45;
  return g;
}

RobotGraph cantilever_graph(const RodGeometry& geom, int degree, int count) {
  RobotGraph g;
  g.bodies.push_back(
      {"rod",
       SoftRod{straight_rod_net(Retraction::Exponential, degree, count, geom.length), geom},
       true});
  return g;
}

LoadSet tip_force_z(double fz) {
  LoadSet loads;
  TipWrench tw;
  tw.body = "rod";
  tw.end = BodyEnd::Tail;
  tw.frame = WrenchFrame::Spatial;
  tw.wrench << 0, 0, 0, 0, 0, fz;
  loads.tip_wrenches.push_back(tw);
  return loads;
}

}  // namespace

TEST_CASE("internal energy basics") {
  RodGeometry geom;
  geom.length = 2.0;
  geom.radius_front = geom.radius_rear = 0.02;
  geom.young_modulus = 1e6;

  // Undeformed rod has zero energy.
  RobotGraph g = cantilever_graph(geom, 3, 9);
  Assembly a = Assembly::build(g);
  CHECK(internal_energy(a) < 1e-18);

  // Uniform axial stretch: U = EA e^2 L / 2.
  double e = 0.01;
  RobotGraph gs;
  gs.bodies.push_back(
      {"rod",
       SoftRod{net_from_curve(NetKind::SE3, Retraction::Exponential,
                              KnotVector::clamped_uniform(3, 9, geom.length),
                              [&](double s) {
                                Pose p;
                                p.p = Vec3((1.0 + e) * s, 0, 0);
                                return p;
                              }),
               geom},
       true});
  Assembly as = Assembly::build(gs);
  double EA = geom.young_modulus * geom.area(0.0);
  CHECK(internal_energy(as) ==
        doctest::Approx(0.5 * EA * e * e * geom.length).epsilon(1e-10));
}

TEST_CASE("energy against refined quadrature on the deformed taper") {
  RodGeometry geom = paper_71_geometry();
  RobotGraph g = cantilever_graph(geom, 3, 15);
  Assembly a = Assembly::build(g);
  LoadSet loads = tip_force_z(0.25);
  StaticResult res = solve_static(a, loads);
  REQUIRE(res.status == SolveStatus::Converged);

  double coarse = internal_energy(a);
  // Independent refined quadrature straight from the strain field.
  const ControlNet& net = g.body("rod").rod().net;
  double fine = 0.0;
  std::vector<double> bp = net.knots().breakpoints();
  const double gl[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
  const double glw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  for (size_t m = 0; m + 1 < bp.size(); ++m) {
    for (int sub = 0; sub < 10; ++sub) {
      double lo = bp[m] + (bp[m + 1] - bp[m]) * sub / 10.0;
      double hi = bp[m] + (bp[m + 1] - bp[m]) * (sub + 1) / 10.0;
      for (int q = 0; q < 3; ++q) {
        double s = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gl[q];
        Twist eps = eval_strain(net, s) - geom.rest_strain(s);
        fine += 0.5 * glw[q] * 0.5 * (hi - lo) * eps.dot(geom.hooke(s) * eps);
      }
    }
  }
  CHECK(std::abs(coarse - fine) / fine < 1e-6);
}

TEST_CASE("residual is the exact gradient of the potential") {
  RodGeometry geom = paper_71_geometry();
  RobotGraph g = cantilever_graph(geom, 3, 9);
  Assembly a = Assembly::build(g);
  LoadSet loads = tip_force_z(0.4);
  loads.gravity = Vec3(0, 0, -9.81);

  // Deform away from the trivial state first.
  (void)solve_static(a, loads);

  StaticEval ev = assemble_static(a, loads, false);
  double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(a.dof());
    for (int i = 0; i < a.dof(); ++i) dir(i) = uniform(-1.0, 1.0);
    dir.normalize();
    Assembly::State st = a.save_state();
    a.apply_step(h * dir);
    double vp = potential_energy(a, loads);
    a.restore_state(st);
    a.apply_step(-h * dir);
    double vm = potential_energy(a, loads);
    a.restore_state(st);
    double fd = (vp - vm) / (2.0 * h);
    double an = ev.gradient.dot(dir);
    CHECK(std::abs(fd - an) <= 1e-5 * std::max(1.0, std::abs(an)));
  }
}

TEST_CASE("tangent stiffness properties") {
  RodGeometry geom = paper_71_geometry();
  RobotGraph g = cantilever_graph(geom, 3, 9);
  Assembly a = Assembly::build(g);
  LoadSet loads = tip_force_z(0.25);
  (void)solve_static(a, loads);

  StaticEval ev = assemble_static(a, loads, true);
  Eigen::SparseMatrix<double> K(a.dof(), a.dof());
  K.setFromTriplets(ev.stiffness.begin(), ev.stiffness.end());
  Eigen::MatrixXd Kd(K);
  CHECK((Kd - Kd.transpose()).norm() < 1e-10 * Kd.norm());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (Kd + Kd.transpose()));
  CHECK(eig.eigenvalues().minCoeff() >= -1e-9 * Kd.norm());

  // At the stress-free straight state the Gauss-Newton stiffness is the
  // exact Hessian; compare against finite differences of the gradient.
  RobotGraph g2 = cantilever_graph(geom, 2, 6);
  Assembly a2 = Assembly::build(g2);
  LoadSet none;
  StaticEval base = assemble_static(a2, none, true);
  Eigen::SparseMatrix<double> K2(a2.dof(), a2.dof());
  K2.setFromTriplets(base.stiffness.begin(), base.stiffness.end());
  double h = 1e-6;
  for (int c = 0; c < a2.dof(); c += 5) {
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(a2.dof());
    dir(c) = 1.0;
    Assembly::State st = a2.save_state();
    a2.apply_step(h * dir);
    Eigen::VectorXd gp = assemble_static(a2, none, false).gradient;
    a2.restore_state(st);
    a2.apply_step(-h * dir);
    Eigen::VectorXd gm = assemble_static(a2, none, false).gradient;
    a2.restore_state(st);
    Eigen::VectorXd fd = (gp - gm) / (2.0 * h);
    CHECK((fd - K2 * dir).norm() < 1e-4 * std::max(1.0, K2.norm()));
  }
}

TEST_CASE("small-deflection cantilever matches Timoshenko beam theory") {
  RodGeometry geom;
  geom.length = 1.0;
  geom.radius_front = geom.radius_rear = 0.02;
  geom.young_modulus = 1e8;
  geom.poisson_ratio = 0.3;
  RobotGraph g = cantilever_graph(geom, 3, 14);
  Assembly a = Assembly::build(g);
  double f = 1e-2;  // keep the response linear
  StaticResult res = solve_static(a, tip_force_z(f));
  REQUIRE(res.status == SolveStatus::Converged);
  double EI = geom.young_modulus * M_PI * std::pow(0.02, 4) / 4.0;
  double GA = geom.shear_modulus() * geom.area(0.0);
  double expect = f * std::pow(geom.length, 3) / (3.0 * EI) + f * geom.length / GA;
  double tipz = g.body("rod").rod().net.pose(13).p.z();
  CHECK(tipz == doctest::Approx(expect).epsilon(2e-3));

  // Pure tip moment: rotation angle M L / EI.
  LoadSet ml;
  TipWrench tw;
  tw.body = "rod";
  tw.end = BodyEnd::Tail;
  tw.frame = WrenchFrame::Body;
  double M = EI * 1e-3;
  tw.wrench << 0, M, 0, 0, 0, 0;
  ml.tip_wrenches.push_back(tw);
  RobotGraph g2 = cantilever_graph(geom, 3, 14);
  Assembly a2 = Assembly::build(g2);
  REQUIRE(solve_static(a2, ml).status == SolveStatus::Converged);
  Mat3 Rtip = g2.body("rod").rod().net.pose(13).R;
  double angle = std::acos(std::clamp((Rtip.trace() - 1.0) / 2.0, -1.0, 1.0));
  CHECK(angle == doctest::Approx(M * geom.length / EI).epsilon(1e-3));
}

TEST_CASE("zero loads converge immediately from the natural shape") {
  RobotGraph g = cantilever_graph(paper_71_geometry(), 3, 15);
  Assembly a = Assembly::build(g);
  LoadSet none;
  StaticResult res = solve_static(a, none);
  CHECK(res.status == SolveStatus::Converged);
  CHECK(res.iterations <= 1);
  CHECK(res.residual_norm < 1e-9);
}

TEST_CASE("newton converges on the paper cantilever case") {
  RobotGraph g = cantilever_graph(paper_71_geometry(), 3, 15);
  Assembly a = Assembly::build(g);
  StaticResult res = solve_static(a, tip_force_z(0.25));
  REQUIRE(res.status == SolveStatus::Converged);
  CHECK(res.residual_norm < 1e-8);
  int below_1e3 = -1;
  for (const IterationRecord& rec : res.trace) {
    if (rec.residual_norm + rec.constraint_norm < 1e-3 && below_1e3 < 0)
      below_1e3 = rec.iteration;
  }
  if (below_1e3 < 0) below_1e3 = res.iterations;
  CHECK(below_1e3 <= 8);
}

TEST_CASE("loop closure constraint is satisfied at convergence") {
  RodGeometry geom;
  geom.length = 1.0;
  geom.radius_front = geom.radius_rear = 0.015;
  geom.young_modulus = 1e6;
  RobotGraph g;
  g.bodies.push_back(
      {"left", SoftRod{straight_rod_net(Retraction::Exponential, 3, 8, 1.0), geom}, true});
  Pose base2;
  base2.p = Vec3(2.2, 0, 0);  // slight gap: rods must stretch to pin together
  base2.R = exp_so3(Vec3(0, 0, M_PI));
  g.bodies.push_back(
      {"right", SoftRod{straight_rod_net(Retraction::Exponential, 3, 8, 1.0, base2), geom},
       true});
  Constraint pin;
  pin.kind = ConstraintKind::Fixed;
  pin.body_a = "left";
  pin.end_a = BodyEnd::Tail;
  pin.body_b = "right";
  pin.end_b = BodyEnd::Tail;
  pin.offset = Pose{exp_so3(Vec3(0, 0, M_PI)), Vec3::Zero()};
  g.constraints.push_back(pin);
  Assembly a = Assembly::build(g);
  StaticResult res = solve_static(a, LoadSet{});
  REQUIRE(res.status == SolveStatus::Converged);
  CHECK(res.constraint_norm < 1e-9);
  CHECK(res.multipliers.size() == 6);
  // The junction carries a tensile axial force pulling the rods together.
  CHECK((g.body("left").rod().net.pose(7).p - g.body("right").rod().net.pose(7).p).norm() <
        1e-8);
}

TEST_CASE("kkt solution satisfies its defining equations") {
  // Random quasi-realistic saddle system, dense vs sparse paths.
  const int n = 60, m = 9;
  Eigen::MatrixXd Hd = Eigen::MatrixXd::Random(n, n);
  Hd = (Hd * Hd.transpose()).eval();
  Hd.diagonal().array() += 1.0;
  Eigen::MatrixXd Ad = Eigen::MatrixXd::Random(m, n);
  KKTSystem sys;
  sys.n = n;
  sys.m = m;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) sys.H.emplace_back(r, c, Hd(r, c));
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < n; ++c) sys.A.emplace_back(r, c, Ad(r, c));
  sys.r = Eigen::VectorXd::Random(n);
  sys.b = Eigen::VectorXd::Random(m);

  KKTSolution dense = solve_kkt(sys, true, false);
  KKTSolution sparse = solve_kkt(sys, false, true);
  CHECK((Hd * dense.sigma + Ad.transpose() * dense.mu + sys.r).norm() <
        1e-10 * std::max(1.0, sys.r.norm()));
  CHECK((Ad * dense.sigma + sys.b).norm() < 1e-10 * std::max(1.0, sys.b.norm()));
  CHECK((dense.sigma - sparse.sigma).norm() < 1e-9 * std::max(1.0, dense.sigma.norm()));
  CHECK((dense.mu - sparse.mu).norm() < 1e-9 * std::max(1.0, dense.mu.norm()));
}

TEST_CASE("equilibrium is covariant under base-frame changes") {
  RodGeometry geom = paper_71_geometry();
  RobotGraph g = cantilever_graph(geom, 3, 10);
  Assembly a = Assembly::build(g);
  LoadSet loads = tip_force_z(0.3);
  loads.gravity = Vec3(0, 0, -2.0);
  REQUIRE(solve_static(a, loads).status == SolveStatus::Converged);

  Pose gc = random_pose(1.0, 1.5);
  RobotGraph g2;
  g2.bodies.push_back(
      {"rod",
       SoftRod{straight_rod_net(Retraction::Exponential, 3, 10, geom.length, gc), geom},
       true});
  Assembly a2 = Assembly::build(g2);
  LoadSet rotated = loads;
  rotated.gravity = gc.R * Vec3(0, 0, -2.0);
  rotated.tip_wrenches[0].wrench.tail<3>() = gc.R * Vec3(0, 0, 0.3);
  REQUIRE(solve_static(a2, rotated).status == SolveStatus::Converged);

  for (int i = 0; i < 10; ++i) {
    Pose lhs = gc * g.body("rod").rod().net.pose(i);
    Pose rhs = g2.body("rod").rod().net.pose(i);
    CHECK((lhs.matrix() - rhs.matrix()).norm() < 1e-8);
  }
}

TEST_CASE("cable wrenches") {
  RobotGraph g;
  g.bodies.push_back({"p1", RigidLink{Pose{Mat3::Identity(), Vec3(0, 0, 0)}, Mat6::Zero()},
                      true});
  Pose mid{exp_so3(Vec3(0.2, 0.1, -0.3)), Vec3(0.1, 0.2, 1.0)};
  g.bodies.push_back({"p2", RigidLink{mid, Mat6::Zero()}, false});
  Pose top{exp_so3(Vec3(-0.1, 0.4, 0.2)), Vec3(-0.2, 0.1, 2.1)};
  g.bodies.push_back({"p3", RigidLink{top, Mat6::Zero()}, false});
  Assembly a = Assembly::build(g);

  Cable cable;
  cable.tension = 2.5;
  cable.via = {{"p1", BodyEnd::Head, Vec3(0.05, 0, 0)},
               {"p2", BodyEnd::Head, Vec3(0.05, 0, 0)},
               {"p3", BodyEnd::Head, Vec3(0.05, 0, 0)}};

  // Zero tension gives zero loads.
  Cable slack = cable;
  slack.tension = 0.0;
  for (const CableWrench& w : cable_wrenches(a, slack)) CHECK(w.wrench.norm() < 1e-15);

  // Newton's third law: wrenches transported to the world origin sum to zero.
  Twist total = Twist::Zero();
  for (const CableWrench& w : cable_wrenches(a, cable)) {
    Pose frame = a.frame(w.body, w.end).g;
    total += adjoint_group(frame.inverse()).transpose() * w.wrench;
  }
  CHECK(total.norm() < 1e-12);

  // Collinear plates, attachments on the line: pure force pairs, no moments
  // about the line through the attachment points.
  RobotGraph gc;
  for (int i = 0; i < 3; ++i) {
    Pose p;
    p.p = Vec3(0, 0, 0.5 * i);
    gc.bodies.push_back({"c" + std::to_string(i), RigidLink{p, Mat6::Zero()}, i == 0});
  }
  Assembly ac = Assembly::build(gc);
  Cable line;
  line.tension = 1.0;
  line.via = {{"c0", BodyEnd::Head, Vec3::Zero()},
              {"c1", BodyEnd::Head, Vec3::Zero()},
              {"c2", BodyEnd::Head, Vec3::Zero()}};
  for (const CableWrench& w : cable_wrenches(ac, line)) {
    CHECK(w.wrench.head<3>().norm() < 1e-15);               // no moments
    CHECK(std::abs(w.wrench.tail<3>().norm() - 1.0) < 1e-12);  // tension magnitude
  }

  // Degenerate segment detection.
  Cable bad;
  bad.tension = 1.0;
  bad.via = {{"c0", BodyEnd::Head, Vec3::Zero()}, {"c0", BodyEnd::Head, Vec3::Zero()}};
  CHECK_THROWS_AS((void)cable_wrenches(ac, bad), DegenerateSegment);
}

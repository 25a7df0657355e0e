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

#include "corod/dynamics.hpp"
#include "test_util.hpp"

using namespace corod;
using namespace corod::test;

namespace {

RodGeometry paper_74_geometry() {
  RodGeometry g;
  g.length = 1.0;
  g.radius_front = 0.05;
  g.radius_rear = 0.03;
  g.young_modulus = 2e6;
  g.poisson_ratio = 0.45;
  g.viscosity = 0.0;
  g.density = 1000.0;
  return g;
}

RobotGraph release_graph(const RodGeometry& geom, int count = 8) {
  RobotGraph g;
  g.bodies.push_back(
      {"rod",
       SoftRod{straight_rod_net(Retraction::Exponential, 3, count, geom.length), geom},
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

TEST_CASE("equilibrium is a fixed point of the DEL step") {
  RobotGraph g = release_graph(paper_74_geometry());
  Assembly a = Assembly::build(g);
  LoadSet loads = tip_force_z(10.0);
  REQUIRE(solve_static(a, loads).status == SolveStatus::Converged);

  Assembly::State st = a.save_state();
  DynamicsSettings ds;
  ds.dt = 0.01;
  TimeStepper stepper(a, ds);
  stepper.del_step(loads);  // priming step with zero velocity
  stepper.del_step(loads);
  stepper.del_step(loads);
  CHECK(stepper.velocity().norm() < 1e-9);
  Assembly::State now = a.save_state();
  for (size_t i = 0; i < st.rod_poses[0].size(); ++i) {
    CHECK((st.rod_poses[0][i].matrix() - now.rod_poses[0][i].matrix()).norm() < 1e-8);
  }
}

TEST_CASE("free rigid body momentum is Ad-transported") {
  RobotGraph g;
  Mat6 inertia = Mat6::Zero();
  inertia.diagonal() << 0.02, 0.03, 0.04, 1.5, 1.5, 1.5;
  g.bodies.push_back({"body", RigidLink{Pose::Identity(), inertia}, false});
  Assembly a = Assembly::build(g);
  REQUIRE(a.dof() == 6);

  DynamicsSettings ds;
  ds.dt = 0.01;
  ds.inner_tolerance = 1e-14;
  TimeStepper stepper(a, ds);
  Eigen::VectorXd v0(6);
  v0 << 0.8, -0.5, 1.1, 0.2, 0.4, -0.3;  // tumbling motion
  stepper.set_velocity(v0);
  LoadSet none;

  stepper.del_step(none);  // prime
  Twist eta_prev = stepper.velocity();
  Twist mu_prev = dtau_inv(Retraction::Exponential, Twist(ds.dt * eta_prev)).transpose() *
                  (inertia * eta_prev);
  for (int k = 0; k < 25; ++k) {
    stepper.del_step(none);
    Twist eta = stepper.velocity();
    Twist mu = dtau_inv(Retraction::Exponential, Twist(ds.dt * eta)).transpose() *
               (inertia * eta);
    Twist transported =
        adjoint_group(exp_se3(Twist(ds.dt * eta)).inverse()).transpose() * mu;
    CHECK((transported - mu_prev).norm() < 1e-10 * mu_prev.norm());
    mu_prev = mu;
  }
}

TEST_CASE("release dynamics: first motion follows the restoring force") {
  RodGeometry geom = paper_74_geometry();
  RobotGraph g = release_graph(geom);
  Assembly a = Assembly::build(g);
  REQUIRE(solve_static(a, tip_force_z(10.0)).status == SolveStatus::Converged);
  double tip_z0 = a.frame("rod", BodyEnd::Tail).g.p.z();
  CHECK(tip_z0 > 0.05);

  DynamicsSettings ds;
  ds.dt = 0.01;
  TimeStepper stepper(a, ds);
  LoadSet released;
  for (int k = 0; k < 10; ++k) stepper.del_step(released);
  // Bent upward, released: the tip accelerates downward.
  CHECK(a.frame("rod", BodyEnd::Tail).g.p.z() < tip_z0 - 1e-4);
}

TEST_CASE("viscous rod dissipates energy monotonically") {
  RodGeometry geom = paper_74_geometry();
  // Kelvin-Voigt damping ratio ~ mu w / (2E): pick mu for visible decay.
  geom.viscosity = 4e4;
  RobotGraph g = release_graph(geom, 6);
  Assembly a = Assembly::build(g);
  REQUIRE(solve_static(a, tip_force_z(8.0)).status == SolveStatus::Converged);

  SimulationSchedule sched;
  sched.steps = 500;
  sched.dt = 0.01;
  sched.integrator = Integrator::Symplectic;
  sched.tip_body = "rod";
  std::vector<EnergySample> tr = simulate(a, sched);
  // The pointwise energy oscillates within a period, so the dissipation sign
  // is checked on period-scale windowed means.
  const size_t win = 125;
  std::vector<double> means;
  for (size_t k = 0; k + win <= tr.size(); k += win) {
    double acc = 0.0;
    for (size_t j = k; j < k + win; ++j) acc += tr[j].total;
    means.push_back(acc / win);
  }
  REQUIRE(means.size() >= 4);
  for (size_t k = 1; k < means.size(); ++k) CHECK(means[k] < means[k - 1]);
  CHECK(tr.back().total < 0.65 * tr.front().total);
}

TEST_CASE("step halving shows first-order trajectory convergence") {
  RodGeometry geom = paper_74_geometry();
  auto run = [&](double dt) {
    RobotGraph g = release_graph(geom, 6);
    Assembly a = Assembly::build(g);
    REQUIRE(solve_static(a, tip_force_z(10.0)).status == SolveStatus::Converged);
    SimulationSchedule sched;
    sched.dt = dt;
    sched.steps = static_cast<int>(std::round(1.0 / dt));
    sched.tip_body = "rod";
    return simulate(a, sched).back().tip.p;
  };
  Vec3 h1 = run(0.01), h2 = run(0.005), h4 = run(0.0025);
  double d12 = (h1 - h2).norm();
  double d24 = (h2 - h4).norm();
  CHECK(d24 < 0.75 * d12);  // at least first-order reduction
}

TEST_CASE("implicit euler: fixed point and dissipation") {
  RodGeometry geom = paper_74_geometry();
  RobotGraph g = release_graph(geom, 6);
  Assembly a = Assembly::build(g);
  LoadSet loads = tip_force_z(10.0);
  REQUIRE(solve_static(a, loads).status == SolveStatus::Converged);
  Assembly::State st = a.save_state();

  DynamicsSettings ds;
  ds.dt = 0.01;
  TimeStepper euler(a, ds);
  euler.implicit_euler_step(loads);
  CHECK(euler.velocity().norm() < 1e-8);
  Assembly::State now = a.save_state();
  CHECK((st.rod_poses[0].back().matrix() - now.rod_poses[0].back().matrix()).norm() < 1e-7);

  // Released: total energy decays.
  SimulationSchedule sched;
  sched.steps = 150;
  sched.dt = 0.01;
  sched.integrator = Integrator::ImplicitEuler;
  sched.tip_body = "rod";
  std::vector<EnergySample> tr = simulate(a, sched);
  CHECK(tr.back().total < 0.9 * tr.front().total);
  for (size_t k = 1; k < tr.size(); ++k)
    CHECK(tr[k].total <= tr[k - 1].total + 1e-6 * std::abs(tr[0].total));
}

TEST_CASE("implicit euler stays bounded in the stiff limit") {
  RodGeometry geom = paper_74_geometry();
  geom.young_modulus = 2e12;  // enormous stiffness
  RobotGraph g = release_graph(geom, 5);
  Assembly a = Assembly::build(g);
  // small transverse disturbance of one control pose
  Twist d = Twist::Zero();
  d(5) = 1e-4;
  g.body("rod").rod().net.perturb(3, d);
  a.refresh();

  DynamicsSettings ds;
  ds.dt = 1e-4;
  TimeStepper stepper(a, ds);
  LoadSet none;
  double bound = 0.0;
  for (int k = 0; k < 1000; ++k) {
    stepper.implicit_euler_step(none);
    bound = std::max(bound, stepper.velocity().cwiseAbs().maxCoeff());
    REQUIRE(std::isfinite(bound));
  }
  CHECK(bound < 1e3);
}

TEST_CASE("total energy basics") {
  RodGeometry geom;
  geom.length = 2.0;
  geom.radius_front = geom.radius_rear = 0.02;
  geom.density = 850.0;
  RobotGraph g;
  g.bodies.push_back(
      {"rod", SoftRod{straight_rod_net(Retraction::Exponential, 3, 7, geom.length), geom},
       false});  // free rod
  Assembly a = Assembly::build(g);
  DynamicsSettings ds;
  TimeStepper stepper(a, ds);
  LoadSet none;

  EnergySample rest = stepper.measure(none, "rod");
  CHECK(rest.kinetic == doctest::Approx(0.0));
  CHECK(rest.potential == doctest::Approx(0.0).epsilon(1e-12));

  // Uniform translation at speed v: kinetic = rho A L v^2 / 2. The body
  // z-axis velocity is the same for every control frame of a straight rod.
  double v = 0.7;
  Eigen::VectorXd qdot = Eigen::VectorXd::Zero(a.dof());
  for (const Slot& s : a.slots()) {
    qdot(s.offset + 5) = v;  // linear z in every control frame
  }
  stepper.set_velocity(qdot);
  EnergySample moving = stepper.measure(none, "rod");
  double expect = 0.5 * geom.density * geom.area(0.0) * geom.length * v * v;
  CHECK(moving.kinetic == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("constraint drift stays bounded in constrained dynamics") {
  RodGeometry geom;
  geom.length = 1.0;
  geom.radius_front = geom.radius_rear = 0.02;
  geom.young_modulus = 1e6;
  geom.density = 1000.0;
  RobotGraph g;
  g.bodies.push_back(
      {"left", SoftRod{straight_rod_net(Retraction::Exponential, 3, 6, 1.0), geom}, true});
  Pose b2;
  b2.p = Vec3(2.0, 0, 0);
  b2.R = exp_so3(Vec3(0, 0, M_PI));
  g.bodies.push_back(
      {"right", SoftRod{straight_rod_net(Retraction::Exponential, 3, 6, 1.0, b2), geom},
       true});
  Constraint pin;
  pin.kind = ConstraintKind::Articulated;
  pin.body_a = "left";
  pin.end_a = BodyEnd::Tail;
  pin.body_b = "right";
  pin.end_b = BodyEnd::Tail;
  pin.offset = Pose{exp_so3(Vec3(0, 0, M_PI)), Vec3::Zero()};
  g.constraints.push_back(pin);
  Assembly a = Assembly::build(g);
  LoadSet gravity;
  gravity.gravity = Vec3(0, 0, -9.81);
  REQUIRE(solve_static(a, gravity).status == SolveStatus::Converged);

  DynamicsSettings ds;
  ds.dt = 0.002;
  TimeStepper stepper(a, ds);
  LoadSet released;  // gravity off: the pinned pair swings back up
  for (int k = 0; k < 100; ++k) stepper.del_step(released);
  CHECK(a.constraints().b.norm() <= 10.0 * ds.tol_constraint);
}

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

#include "corod/multibody.hpp"
#include "test_util.hpp"

using namespace corod;
using namespace corod::test;

namespace {

ControlNet straight_net(int degree, int count, double length, const Pose& base) {
  std::vector<Pose> poses;
  for (int i = 0; i < count; ++i) {
    Pose g = base;
    g.p += base.R * Vec3(length * i / (count - 1), 0, 0);
    poses.push_back(g);
  }
  return ControlNet(NetKind::SE3, Retraction::Exponential,
                    KnotVector::clamped_uniform(degree, count, length), poses);
}

ControlNet wiggly_net(int degree, int count, double length) {
  std::vector<Pose> poses;
  poses.push_back(random_pose(0.4, 0.4));
  for (int i = 1; i < count; ++i)
    poses.push_back(boxplus(poses.back(), random_twist(0.25, 0.3)));
  return ControlNet(NetKind::SE3, Retraction::Exponential,
                    KnotVector::clamped_uniform(degree, count, length), poses);
}

RodGeometry small_geom() {
  RodGeometry g;
  g.length = 1.0;
  g.radius_front = 0.02;
  g.radius_rear = 0.02;
  g.young_modulus = 1e6;
  return g;
}

}  // namespace

TEST_CASE("constraint residuals and extraction matrices") {
  Pose g = random_pose();
  ConstraintEval fixed = constraint_eval(ConstraintKind::Fixed, g, g);
  CHECK(fixed.b.norm() < 1e-14);
  CHECK((fixed.j2 - Mat6::Identity()).norm() < 1e-12);

  ConstraintEval art = constraint_eval(ConstraintKind::Articulated, g, g);
  CHECK(art.b.norm() < 1e-14);
  Eigen::Matrix<double, 3, 6> p1;
  p1 << Mat3::Zero(), Mat3::Identity();
  CHECK((art.j2 - p1).norm() < 1e-12);

  ConstraintEval sl = constraint_eval(ConstraintKind::Sliding, g, g);
  Eigen::Matrix<double, 3, 6> p2;
  p2 << Mat3::Identity(), Mat3::Zero();
  CHECK((sl.j2 - p2).norm() < 1e-12);

  // Pure relative rotation leaves the articulated constraint satisfied.
  Pose rot = g;
  rot.R = g.R * exp_so3(Vec3(0.3, -0.2, 0.5));
  CHECK(constraint_eval(ConstraintKind::Articulated, g, rot).b.norm() < 1e-14);
}

TEST_CASE("constraint Jacobians match finite differences") {
  double h = 1e-6;
  for (ConstraintKind kind :
       {ConstraintKind::Fixed, ConstraintKind::Articulated, ConstraintKind::Sliding}) {
    for (int trial = 0; trial < 8; ++trial) {
      Pose g1 = random_pose();
      Pose offset = exp_se3(random_twist(0.1, 0.1));
      // Near-satisfied pair: ||b|| up to ~0.1.
      Pose g2 = boxplus(g1 * offset, random_twist(0.04, 0.04));
      ConstraintEval ev = constraint_eval(kind, g1, g2, offset);
      for (int c = 0; c < 6; ++c) {
        Twist dir = Twist::Zero();
        dir(c) = 1.0;
        ConstraintEval p1 = constraint_eval(kind, boxplus(g1, Twist(h * dir)), g2, offset);
        ConstraintEval m1 = constraint_eval(kind, boxplus(g1, Twist(-h * dir)), g2, offset);
        CHECK(((p1.b - m1.b) / (2.0 * h) - ev.j1.col(c)).norm() < 1e-6);
        ConstraintEval p2 = constraint_eval(kind, g1, boxplus(g2, Twist(h * dir)), offset);
        ConstraintEval m2 = constraint_eval(kind, g1, boxplus(g2, Twist(-h * dir)), offset);
        CHECK(((p2.b - m2.b) / (2.0 * h) - ev.j2.col(c)).norm() < 1e-6);
      }
    }
  }
}

TEST_CASE("index map counting") {
  // Single rod, clamped base: 6n unknowns.
  RobotGraph g;
  g.bodies.push_back({"rod", SoftRod{straight_net(3, 8, 1.0, Pose::Identity()), small_geom()},
                      true});
  Assembly a = Assembly::build(g);
  CHECK(a.dof() == 6 * 7);
  CHECK(a.multipliers() == 0);

  // Two rods sharing one boundary pose.
  RobotGraph g2;
  g2.bodies.push_back({"r1", SoftRod{straight_net(3, 6, 1.0, Pose::Identity()), small_geom()},
                       true});
  Pose base2;
  base2.p = Vec3(1, 0, 0);
  g2.bodies.push_back({"r2", SoftRod{straight_net(3, 6, 1.0, base2), small_geom()}, false});
  g2.connections.push_back({"r1", "r2", ConnectionKind::DirectRigid, BodyEnd::Tail, {}, ""});
  Assembly a2 = Assembly::build(g2);
  // r1: 5 slots (clamped base), r2: 5 poses, base shared: 5 + 5 = 10 poses.
  CHECK(a2.dof() == 6 * 10);

  // Determinism: rebuilding yields the identical map.
  Assembly a3 = Assembly::build(g2);
  REQUIRE(a3.slots().size() == a2.slots().size());
  for (size_t i = 0; i < a2.slots().size(); ++i) {
    CHECK(a2.slots()[i].offset == a3.slots()[i].offset);
    CHECK(a2.slots()[i].body == a3.slots()[i].body);
    CHECK(a2.slots()[i].pose == a3.slots()[i].pose);
  }
}

TEST_CASE("graph validation errors") {
  RobotGraph g;
  g.bodies.push_back({"rod", SoftRod{straight_net(3, 5, 1.0, Pose::Identity()), small_geom()},
                      true});
  g.connections.push_back({"rod", "ghost", ConnectionKind::DirectRigid, BodyEnd::Tail, {}, ""});
  CHECK_THROWS_AS((void)Assembly::build(g), DanglingReference);

  RobotGraph g2;
  g2.bodies.push_back({"a", SoftRod{straight_net(3, 5, 1.0, Pose::Identity()), small_geom()},
                       false});
  g2.bodies.push_back({"b", SoftRod{straight_net(3, 5, 1.0, Pose::Identity()), small_geom()},
                       false});
  g2.connections.push_back({"a", "b", ConnectionKind::DirectRigid, BodyEnd::Tail, {}, ""});
  g2.connections.push_back({"b", "a", ConnectionKind::DirectRigid, BodyEnd::Tail, {}, ""});
  CHECK_THROWS_AS((void)Assembly::build(g2), CycleDetected);
}

TEST_CASE("connection propagation") {
  // Rigid insertion with identity offset reduces to a direct connection.
  for (bool identity_offset : {true, false}) {
    RobotGraph g;
    g.bodies.push_back({"r1", SoftRod{wiggly_net(3, 6, 1.0), small_geom()}, true});
    g.bodies.push_back({"r2", SoftRod{straight_net(3, 6, 1.0, Pose::Identity()), small_geom()},
                        false});
    Pose off = identity_offset ? Pose::Identity() : exp_se3(random_twist(0.3, 0.2));
    g.connections.push_back(
        {"r1", "r2", ConnectionKind::RigidInsertion, BodyEnd::Tail, off, ""});
    Assembly a = Assembly::build(g);
    Pose tail = g.body("r1").rod().net.pose(5);
    Pose expect = tail * off;
    CHECK((g.body("r2").rod().net.pose(0).matrix() - expect.matrix()).norm() < 1e-12);

    // Velocity map to the child base: finite differences of the propagated
    // pose against the frame jacobian (expected Ad^-1 of the offset).
    FramePoint fp = a.frame("r2", BodyEnd::Head);
    REQUIRE(fp.jac.size() == 1);
    CHECK((fp.jac[0].map - adjoint_group(off.inverse())).norm() < 1e-12);
    double h = 1e-5;
    for (int c = 0; c < 6; ++c) {
      Eigen::VectorXd sigma = Eigen::VectorXd::Zero(a.dof());
      const Slot& slot = a.slots()[static_cast<size_t>(fp.jac[0].slot)];
      Assembly::State st = a.save_state();
      sigma(slot.offset + c) = h;
      a.apply_step(sigma);
      Pose plus = a.frame("r2", BodyEnd::Head).g;
      a.restore_state(st);
      sigma(slot.offset + c) = -h;
      a.apply_step(sigma);
      Pose minus = a.frame("r2", BodyEnd::Head).g;
      a.restore_state(st);
      Twist fd = boxminus(plus, minus) / (2.0 * h);
      CHECK((fd - fp.jac[0].map.col(c)).norm() < 1e-6);
    }
  }
}

TEST_CASE("shared boundary pose has identity Jacobian at the junction") {
  RobotGraph g;
  g.bodies.push_back({"r1", SoftRod{wiggly_net(3, 6, 1.0), small_geom()}, true});
  g.bodies.push_back({"r2", SoftRod{straight_net(3, 6, 1.0, Pose::Identity()), small_geom()},
                      false});
  g.connections.push_back({"r1", "r2", ConnectionKind::DirectRigid, BodyEnd::Tail, {}, ""});
  Assembly a = Assembly::build(g);
  FramePoint junction = a.station("r2", 0.0);
  // The only influencing slot at s=0 is the shared boundary pose, identity.
  bool found = false;
  for (const JacEntry& e : junction.jac) {
    if ((e.map - Mat6::Identity()).norm() < 1e-10) found = true;
  }
  CHECK(found);
}

TEST_CASE("movable joint chains expose joint coordinates") {
  RobotGraph g;
  g.bodies.push_back({"anchor", RigidLink{Pose::Identity(), Mat6::Zero()}, true});
  Joint j;
  j.kind = JointKind::Prismatic;
  j.axis = Vec3(0, 0, 1);
  j.displacement = 0.25;
  g.bodies.push_back({"slide", j, false});
  g.bodies.push_back({"platen", RigidLink{Pose::Identity(), Mat6::Zero()}, false});
  g.connections.push_back(
      {"anchor", "platen", ConnectionKind::MovableJoint, BodyEnd::Tail, {}, "slide"});
  Assembly a = Assembly::build(g);
  CHECK(a.dof() == 1);
  CHECK((a.frame("platen", BodyEnd::Head).g.p - Vec3(0, 0, 0.25)).norm() < 1e-14);

  Eigen::VectorXd sigma = Eigen::VectorXd::Zero(1);
  sigma(0) = 0.1;
  a.apply_step(sigma);
  CHECK((a.frame("platen", BodyEnd::Head).g.p - Vec3(0, 0, 0.35)).norm() < 1e-14);

  // Spherical joint: frame jacobian against finite differences.
  RobotGraph g2;
  g2.bodies.push_back({"anchor", RigidLink{random_pose(), Mat6::Zero()}, true});
  Joint sj;
  sj.kind = JointKind::Spherical;
  sj.angles = Vec3(0.4, -0.2, 0.3);
  g2.bodies.push_back({"ball", sj, false});
  g2.bodies.push_back({"arm", RigidLink{Pose::Identity(), Mat6::Zero()}, false});
  Pose off = exp_se3(random_twist(0.2, 0.4));
  g2.connections.push_back(
      {"anchor", "arm", ConnectionKind::MovableJoint, BodyEnd::Tail, off, "ball"});
  Assembly a2 = Assembly::build(g2);
  CHECK(a2.dof() == 3);
  FramePoint fp = a2.frame("arm", BodyEnd::Head);
  REQUIRE(fp.jac.size() == 1);
  double h = 1e-6;
  for (int c = 0; c < 3; ++c) {
    Eigen::VectorXd sp = Eigen::VectorXd::Zero(3);
    Assembly::State st = a2.save_state();
    sp(c) = h;
    a2.apply_step(sp);
    Pose plus = a2.frame("arm", BodyEnd::Head).g;
    a2.restore_state(st);
    sp(c) = -h;
    a2.apply_step(sp);
    Pose minus = a2.frame("arm", BodyEnd::Head).g;
    a2.restore_state(st);
    Twist fd = boxminus(plus, minus) / (2.0 * h);
    CHECK((fd - fp.jac[0].map.col(c)).norm() < 1e-5);
  }
}

TEST_CASE("concentric composition") {
  ControlNet main_net = wiggly_net(3, 8, 1.0);
  RodGeometry tg = small_geom();

  // Identity relative net: all fields match the main tube.
  {
    std::vector<Pose> rel(4, Pose::Identity());
    ConcentricTube tube{ControlNet(NetKind::SO3Relative, Retraction::Exponential,
                                   KnotVector::clamped_uniform(2, 4, 0.6, 0.2), rel),
                        tg};
    for (double s : {0.2, 0.45, 0.8}) {
      ConcentricPoint cp = concentric_fields(main_net, tube, s);
      PointKinematics mk = eval_point(main_net, s);
      CHECK((cp.g.matrix() - mk.g.matrix()).norm() < 1e-13);
      CHECK((cp.xi - mk.xi).norm() < 1e-13);
    }
  }

  // Constant relative rotation: identical positions, frames differ by it.
  {
    Mat3 R = exp_so3(Vec3(0.7, 0, 0));
    std::vector<Pose> rel(4, Pose{R, Vec3::Zero()});
    ConcentricTube tube{ControlNet(NetKind::SO3Relative, Retraction::Exponential,
                                   KnotVector::clamped_uniform(2, 4, 0.6, 0.2), rel),
                        tg};
    for (double s : {0.25, 0.6}) {
      ConcentricPoint cp = concentric_fields(main_net, tube, s);
      PointKinematics mk = eval_point(main_net, s);
      CHECK((cp.g.p - mk.g.p).norm() < 1e-13);
      CHECK((cp.g.R - mk.g.R * R).norm() < 1e-13);
    }
  }

  // Composed strain against finite differences of the composed pose.
  {
    std::vector<Pose> rel;
    rel.push_back(Pose{exp_so3(Vec3(0.2, 0, 0)), Vec3::Zero()});
    for (int i = 1; i < 5; ++i)
      rel.push_back(Pose{rel.back().R * exp_so3(random_vec3(0.25)), Vec3::Zero()});
    ConcentricTube tube{ControlNet(NetKind::SO3Relative, Retraction::Exponential,
                                   KnotVector::clamped_uniform(2, 5, 0.6, 0.2), rel),
                        tg};
    double h = 1e-5;
    for (double s : {0.3, 0.5, 0.7}) {
      ConcentricPoint p = concentric_fields(main_net, tube, s + h, false);
      ConcentricPoint m = concentric_fields(main_net, tube, s - h, false);
      ConcentricPoint c = concentric_fields(main_net, tube, s, false);
      Twist fd = boxminus(p.g, m.g) / (2.0 * h);
      CHECK((fd - c.xi).norm() < 1e-6);
    }
    CHECK_THROWS_AS((void)concentric_fields(main_net, tube, 0.05, false), OutOfOverlap);
  }
}

TEST_CASE("quad point slot jacobians against finite differences") {
  // One clamped rod plus a rigid-inserted second rod: exercises slotted
  // blocks and distributed base attachments in one pass.
  RobotGraph g;
  g.bodies.push_back({"r1", SoftRod{wiggly_net(3, 5, 1.0), small_geom()}, true});
  g.bodies.push_back({"r2", SoftRod{straight_net(2, 5, 0.8, Pose::Identity()), small_geom()},
                      false});
  Pose off = exp_se3(random_twist(0.2, 0.3));
  g.connections.push_back({"r1", "r2", ConnectionKind::RigidInsertion, BodyEnd::Tail, off, ""});
  Assembly a = Assembly::build(g);

  std::vector<QuadPoint> pts = a.quad_points();
  REQUIRE(!pts.empty());
  double h = 1e-5;
  // Strain-level check: the assembled (Jp + ad_xi J) must differentiate the
  // strain field at the point; verified against FD of the assembled strain.
  for (size_t pi = 3; pi < pts.size(); pi += 5) {
    const QuadPoint& qp = pts[pi];
    for (const QuadBlock& blk : qp.blocks) {
      const Slot& slot = a.slots()[static_cast<size_t>(blk.slot)];
      for (int c = 0; c < slot.dim; ++c) {
        Eigen::VectorXd sigma = Eigen::VectorXd::Zero(a.dof());
        Assembly::State st = a.save_state();
        sigma(slot.offset + c) = h;
        a.apply_step(sigma);
        std::vector<QuadPoint> plus = a.quad_points();
        a.restore_state(st);
        sigma(slot.offset + c) = -h;
        a.apply_step(sigma);
        std::vector<QuadPoint> minus = a.quad_points();
        a.restore_state(st);
        Twist fd_xi = (plus[pi].xi - minus[pi].xi) / (2.0 * h);
        Twist model = (blk.Jp + adjoint_algebra(qp.xi) * blk.J).col(c);
        // Sum over duplicate slot entries if any.
        for (const QuadBlock& other : qp.blocks) {
          if (&other != &blk && other.slot == blk.slot)
            model += (other.Jp + adjoint_algebra(qp.xi) * other.J).col(c);
        }
        CHECK((fd_xi - model).norm() < 2e-5);
      }
    }
  }
}

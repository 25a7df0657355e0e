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

#include "corod/multibody.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace corod {

Pose Joint::pose() const {
  if (kind == JointKind::Spherical) return Pose{exp_so3(angles), Vec3::Zero()};
  return Pose{Mat3::Identity(), displacement * axis};
}

Body& RobotGraph::body(const std::string& id) {
  int i = body_index(id);
  if (i < 0) throw DanglingReference("unknown body '" + id + "'");
  return bodies[static_cast<size_t>(i)];
}

const Body& RobotGraph::body(const std::string& id) const {
  int i = body_index(id);
  if (i < 0) throw DanglingReference("unknown body '" + id + "'");
  return bodies[static_cast<size_t>(i)];
}

int RobotGraph::body_index(const std::string& id) const {
  for (size_t i = 0; i < bodies.size(); ++i) {
    if (bodies[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

ConstraintEval constraint_eval(ConstraintKind kind, const Pose& g1, const Pose& g2,
                               const Pose& offset, Retraction retraction) {
  Twist b6 = boxminus(retraction, g2, g1 * offset);
  Mat6 dtinv, ad_tb_inv;
  if (b6.norm() < 1e-3) {
    // First-order expansions around a satisfied constraint.
    dtinv = Mat6::Identity() + 0.5 * adjoint_algebra(b6);
    ad_tb_inv = Mat6::Identity() - adjoint_algebra(b6);
  } else {
    dtinv = dtau_inv(retraction, b6);
    ad_tb_inv = adjoint_group(retract(retraction, b6).inverse());
  }
  Mat6 j2 = dtinv;
  Mat6 j1 = -dtinv * ad_tb_inv * adjoint_group(offset.inverse());

  ConstraintEval out;
  if (kind == ConstraintKind::Fixed) {
    out.b = b6;
    out.j1 = j1;
    out.j2 = j2;
  } else if (kind == ConstraintKind::Articulated) {
    out.b = b6.tail<3>();
    out.j1 = j1.bottomRows<3>();
    out.j2 = j2.bottomRows<3>();
  } else {
    out.b = b6.head<3>();
    out.j1 = j1.topRows<3>();
    out.j2 = j2.topRows<3>();
  }
  return out;
}

ConcentricPoint concentric_fields(const ControlNet& main_net, const ConcentricTube& tube,
                                  double s, bool with_jacobians) {
  const KnotVector& rk = tube.relative.knots();
  if (s < rk.domain_start() - 1e-12 || s > rk.domain_end() + 1e-12)
    throw OutOfOverlap("arclength outside the tube overlap");

  ConcentricPoint out;
  out.main = eval_point(main_net, s, with_jacobians);
  out.rel = eval_point(tube.relative, s, with_jacobians);
  Pose gr = out.rel.g;
  Mat6 ad_inv = adjoint_group(gr.inverse());
  out.g = out.main.g * gr;
  out.xi = ad_inv * out.main.xi + out.rel.xi;
  if (with_jacobians) {
    Mat6 ad_xir = adjoint_algebra(out.rel.xi);
    for (size_t l = 0; l < out.main.J.size(); ++l) {
      // d/ds Ad^-1_{g_r} = -ad_{xi_r} Ad^-1_{g_r}
      out.main.Jp[l] = ad_inv * out.main.Jp[l] - ad_xir * (ad_inv * out.main.J[l]);
      out.main.J[l] = ad_inv * out.main.J[l];
    }
  }
  return out;
}

namespace {

std::vector<JacEntry> composed(const FrameJac& parent, const Mat6& pre) {
  FrameJac out;
  out.reserve(parent.size());
  for (const JacEntry& e : parent) out.push_back({e.slot, pre * e.map});
  return out;
}

// Gauss-Legendre nodes/weights on [-1, 1] for 3..5 points.
void gauss_rule(int n, std::vector<std::pair<double, double>>& nw) {
  switch (n) {
    case 4:
      nw = {{-0.8611363115940526, 0.3478548451374538},
            {-0.3399810435848563, 0.6521451548625461},
            {0.3399810435848563, 0.6521451548625461},
            {0.8611363115940526, 0.3478548451374538}};
      break;
    case 5:
      nw = {{-0.9061798459386640, 0.2369268850561891},
            {-0.5384693101056831, 0.4786286704993665},
            {0.0, 0.5688888888888889},
            {0.5384693101056831, 0.4786286704993665},
            {0.9061798459386640, 0.2369268850561891}};
      break;
    default:
      nw = {{-0.7745966692414834, 5.0 / 9.0},
            {0.0, 8.0 / 9.0},
            {0.7745966692414834, 5.0 / 9.0}};
  }
}

}  // namespace

Assembly Assembly::build(RobotGraph& graph, int gauss_per_span) {
  Assembly a;
  a.graph_ = &graph;
  a.gauss_per_span_ = gauss_per_span;
  const int nb = static_cast<int>(graph.bodies.size());

  for (int i = 0; i < nb; ++i) {
    for (int j = i + 1; j < nb; ++j) {
      if (graph.bodies[static_cast<size_t>(i)].id == graph.bodies[static_cast<size_t>(j)].id)
        throw std::invalid_argument("duplicate body id '" +
                                    graph.bodies[static_cast<size_t>(i)].id + "'");
    }
    if (graph.bodies[static_cast<size_t>(i)].is_rod())
      a.retraction_ = graph.bodies[static_cast<size_t>(i)].rod().net.retraction();
  }

  a.parent_conn_.assign(static_cast<size_t>(nb), -1);
  for (size_t c = 0; c < graph.connections.size(); ++c) {
    const Connection& conn = graph.connections[c];
    int p = graph.body_index(conn.parent), ch = graph.body_index(conn.child);
    if (p < 0 || ch < 0)
      throw DanglingReference("connection references unknown body");
    if (!conn.joint.empty()) {
      int j = graph.body_index(conn.joint);
      if (j < 0 || !std::holds_alternative<Joint>(graph.bodies[static_cast<size_t>(j)].shape))
        throw DanglingReference("connection references unknown joint '" + conn.joint + "'");
    }
    if (std::holds_alternative<Joint>(graph.bodies[static_cast<size_t>(ch)].shape))
      throw std::invalid_argument("a joint cannot be a connection child");
    if (a.parent_conn_[static_cast<size_t>(ch)] >= 0)
      throw CycleDetected("body '" + conn.child + "' has two parents");
    a.parent_conn_[static_cast<size_t>(ch)] = static_cast<int>(c);
  }
  for (const Constraint& c : graph.constraints) {
    if (graph.body_index(c.body_a) < 0 || graph.body_index(c.body_b) < 0)
      throw DanglingReference("constraint references unknown body");
  }
  for (const ConcentricAssembly& ca : graph.concentric) {
    int m = graph.body_index(ca.main);
    if (m < 0 || !graph.bodies[static_cast<size_t>(m)].is_rod())
      throw DanglingReference("concentric assembly main tube must be a rod");
  }

  // Kahn's ordering over the connection tree; loops must be constraints.
  std::vector<int> indeg(static_cast<size_t>(nb), 0);
  for (int b = 0; b < nb; ++b)
    if (a.parent_conn_[static_cast<size_t>(b)] >= 0) indeg[static_cast<size_t>(b)] = 1;
  std::vector<int> queue;
  for (int b = 0; b < nb; ++b)
    if (indeg[static_cast<size_t>(b)] == 0) queue.push_back(b);
  for (size_t head = 0; head < queue.size(); ++head) {
    int b = queue[head];
    a.topo_order_.push_back(b);
    for (size_t c = 0; c < graph.connections.size(); ++c) {
      if (graph.body_index(graph.connections[c].parent) != b) continue;
      int ch = graph.body_index(graph.connections[c].child);
      if (--indeg[static_cast<size_t>(ch)] == 0) queue.push_back(ch);
    }
  }
  if (static_cast<int>(a.topo_order_.size()) != nb)
    throw CycleDetected("connection graph contains a cycle; close loops with constraints");

  // Slot assignment.
  a.rod_pose_slot_.assign(static_cast<size_t>(nb), {});
  a.rigid_slot_.assign(static_cast<size_t>(nb), -1);
  a.joint_slot_.assign(static_cast<size_t>(nb), -1);
  a.base_jac_.assign(static_cast<size_t>(nb), {});
  int offset = 0;
  auto new_slot = [&](Slot::Target t, int body, int sub, int pose, int dim) {
    Slot s;
    s.target = t;
    s.body = body;
    s.sub = sub;
    s.pose = pose;
    s.dim = dim;
    s.offset = offset;
    offset += dim;
    a.slots_.push_back(s);
    return static_cast<int>(a.slots_.size()) - 1;
  };

  for (int b = 0; b < nb; ++b) {
    Body& body = graph.bodies[static_cast<size_t>(b)];
    bool has_parent = a.parent_conn_[static_cast<size_t>(b)] >= 0;
    if (body.is_rod()) {
      int n = body.rod().net.count();
      a.rod_pose_slot_[static_cast<size_t>(b)].assign(static_cast<size_t>(n), -1);
      for (int i = 0; i < n; ++i) {
        bool eliminated = (i == 0) && (has_parent || body.clamped);
        if (!eliminated)
          a.rod_pose_slot_[static_cast<size_t>(b)][static_cast<size_t>(i)] =
              new_slot(Slot::Target::RodPose, b, -1, i, 6);
      }
    } else if (std::holds_alternative<RigidLink>(body.shape)) {
      if (!has_parent && !body.clamped)
        a.rigid_slot_[static_cast<size_t>(b)] = new_slot(Slot::Target::RigidPose, b, -1, -1, 6);
    } else {
      a.joint_slot_[static_cast<size_t>(b)] =
          new_slot(Slot::Target::JointCoord, b, -1, -1, body.joint().dof());
    }
  }
  // Direct rigid rod-to-rod connections share the boundary pose slot.
  for (size_t c = 0; c < graph.connections.size(); ++c) {
    const Connection& conn = graph.connections[c];
    if (conn.kind != ConnectionKind::DirectRigid) continue;
    int p = graph.body_index(conn.parent), ch = graph.body_index(conn.child);
    const Body& pb = graph.bodies[static_cast<size_t>(p)];
    const Body& cb = graph.bodies[static_cast<size_t>(ch)];
    if (pb.is_rod() && cb.is_rod()) {
      int pidx = conn.parent_end == BodyEnd::Tail ? pb.rod().net.count() - 1 : 0;
      a.rod_pose_slot_[static_cast<size_t>(ch)][0] =
          a.rod_pose_slot_[static_cast<size_t>(p)][static_cast<size_t>(pidx)];
    }
  }

  a.rel_slot_.resize(graph.concentric.size());
  for (size_t ci = 0; ci < graph.concentric.size(); ++ci) {
    a.rel_slot_[ci].resize(graph.concentric[ci].tubes.size());
    for (size_t t = 0; t < graph.concentric[ci].tubes.size(); ++t) {
      int n = graph.concentric[ci].tubes[t].relative.count();
      a.rel_slot_[ci][t].assign(static_cast<size_t>(n), -1);
      for (int i = 0; i < n; ++i)
        a.rel_slot_[ci][t][static_cast<size_t>(i)] = new_slot(
            Slot::Target::RelativePose, static_cast<int>(ci), static_cast<int>(t), i, 3);
    }
  }
  a.dof_ = offset;

  int row = 0;
  for (const Constraint& c : graph.constraints) {
    a.constraint_row_.push_back(row);
    row += c.dim();
  }
  a.mult_ = row;

  a.refresh();
  return a;
}

void Assembly::refresh() {
  RobotGraph& g = *graph_;
  for (int b : topo_order_) {
    Body& body = g.bodies[static_cast<size_t>(b)];
    int ci = parent_conn_[static_cast<size_t>(b)];
    if (ci < 0) {
      // Roots: base jac is empty when clamped, identity on own slot otherwise.
      if (body.is_rod()) {
        int s0 = rod_pose_slot_[static_cast<size_t>(b)][0];
        base_jac_[static_cast<size_t>(b)] =
            s0 >= 0 ? FrameJac{{s0, Mat6::Identity()}} : FrameJac{};
      } else if (std::holds_alternative<RigidLink>(body.shape)) {
        int s = rigid_slot_[static_cast<size_t>(b)];
        base_jac_[static_cast<size_t>(b)] =
            s >= 0 ? FrameJac{{s, Mat6::Identity()}} : FrameJac{};
      }
      continue;
    }
    const Connection& conn = g.connections[static_cast<size_t>(ci)];
    int p = g.body_index(conn.parent);
    const Body& parent = g.bodies[static_cast<size_t>(p)];
    Pose parent_end = parent.is_rod()
                          ? (conn.parent_end == BodyEnd::Tail
                                 ? parent.rod().net.pose(parent.rod().net.count() - 1)
                                 : parent.rod().net.pose(0))
                          : parent.rigid().pose;
    FrameJac parent_jac = end_jac(p, conn.parent_end);

    Pose base;
    FrameJac jac;
    switch (conn.kind) {
      case ConnectionKind::DirectRigid:
        base = parent_end;
        jac = parent_jac;
        break;
      case ConnectionKind::RigidInsertion:
        base = parent_end * conn.offset;
        jac = composed(parent_jac, adjoint_group(conn.offset.inverse()));
        break;
      case ConnectionKind::MovableJoint: {
        const Body& jb = g.body(conn.joint);
        Pose gj = jb.joint().pose();
        Pose x = gj * conn.offset;
        base = parent_end * x;
        jac = composed(parent_jac, adjoint_group(x.inverse()));
        // Joint slot variables are right-increments of the joint pose, so
        // their twist basis is coordinate-independent.
        Eigen::Matrix<double, 6, Eigen::Dynamic> B;
        if (jb.joint().kind == JointKind::Prismatic) {
          B.resize(6, 1);
          B.setZero();
          B.template bottomRows<3>() = jb.joint().axis;
        } else {
          B.resize(6, 3);
          B.setZero();
          B.template topRows<3>() = Mat3::Identity();
        }
        jac.push_back({joint_slot_[static_cast<size_t>(g.body_index(conn.joint))],
                       adjoint_group(conn.offset.inverse()) * B});
        break;
      }
    }
    if (body.is_rod()) {
      body.rod().net.set_pose(0, base);
      if (rod_pose_slot_[static_cast<size_t>(b)][0] >= 0) {
        // Shared boundary pose: the slot belongs to the parent tail.
        base_jac_[static_cast<size_t>(b)] = {
            {rod_pose_slot_[static_cast<size_t>(b)][0], Mat6::Identity()}};
      } else {
        base_jac_[static_cast<size_t>(b)] = jac;
      }
    } else {
      body.rigid().pose = base;
      base_jac_[static_cast<size_t>(b)] = jac;
    }
  }
}

FrameJac Assembly::end_jac(int body_index, BodyEnd end) const {
  const Body& body = graph_->bodies[static_cast<size_t>(body_index)];
  if (body.is_rod()) {
    if (end == BodyEnd::Tail) {
      int slot = rod_pose_slot_[static_cast<size_t>(body_index)].back();
      return {{slot, Mat6::Identity()}};
    }
    int s0 = rod_pose_slot_[static_cast<size_t>(body_index)][0];
    if (s0 >= 0) return {{s0, Mat6::Identity()}};
    return base_jac_[static_cast<size_t>(body_index)];
  }
  int s = rigid_slot_[static_cast<size_t>(body_index)];
  if (s >= 0) return {{s, Mat6::Identity()}};
  return base_jac_[static_cast<size_t>(body_index)];
}

void Assembly::apply_step(const Eigen::VectorXd& sigma) {
  RobotGraph& g = *graph_;
  for (const Slot& s : slots_) {
    switch (s.target) {
      case Slot::Target::RodPose:
        g.bodies[static_cast<size_t>(s.body)].rod().net.perturb(
            s.pose, sigma.segment<6>(s.offset));
        break;
      case Slot::Target::RigidPose: {
        Pose& p = g.bodies[static_cast<size_t>(s.body)].rigid().pose;
        p = boxplus(retraction_, p, sigma.segment<6>(s.offset));
        break;
      }
      case Slot::Target::JointCoord: {
        Joint& j = g.bodies[static_cast<size_t>(s.body)].joint();
        if (j.kind == JointKind::Prismatic) {
          j.displacement += sigma(s.offset);
        } else {
          j.angles = log_so3(exp_so3(j.angles) * exp_so3(sigma.segment<3>(s.offset)));
        }
        break;
      }
      case Slot::Target::RelativePose: {
        Twist v = Twist::Zero();
        v.head<3>() = sigma.segment<3>(s.offset);
        g.concentric[static_cast<size_t>(s.body)]
            .tubes[static_cast<size_t>(s.sub)]
            .relative.perturb(s.pose, v);
        break;
      }
    }
  }
  refresh();
}

Assembly::State Assembly::save_state() const {
  State st;
  for (const Body& b : graph_->bodies) {
    if (b.is_rod()) {
      st.rod_poses.push_back(b.rod().net.poses());
      st.rigid_poses.push_back(Pose::Identity());
      st.joint_angles.push_back(Vec3::Zero());
      st.joint_disp.push_back(0.0);
    } else if (std::holds_alternative<RigidLink>(b.shape)) {
      st.rod_poses.push_back({});
      st.rigid_poses.push_back(b.rigid().pose);
      st.joint_angles.push_back(Vec3::Zero());
      st.joint_disp.push_back(0.0);
    } else {
      st.rod_poses.push_back({});
      st.rigid_poses.push_back(Pose::Identity());
      st.joint_angles.push_back(b.joint().angles);
      st.joint_disp.push_back(b.joint().displacement);
    }
  }
  for (const ConcentricAssembly& ca : graph_->concentric) {
    std::vector<std::vector<Pose>> tubes;
    for (const ConcentricTube& t : ca.tubes) tubes.push_back(t.relative.poses());
    st.rel_poses.push_back(std::move(tubes));
  }
  return st;
}

void Assembly::restore_state(const State& st) {
  for (size_t b = 0; b < graph_->bodies.size(); ++b) {
    Body& body = graph_->bodies[b];
    if (body.is_rod()) {
      body.rod().net.set_poses(st.rod_poses[b]);
    } else if (std::holds_alternative<RigidLink>(body.shape)) {
      body.rigid().pose = st.rigid_poses[b];
    } else {
      body.joint().angles = st.joint_angles[b];
      body.joint().displacement = st.joint_disp[b];
    }
  }
  for (size_t ci = 0; ci < graph_->concentric.size(); ++ci) {
    for (size_t t = 0; t < graph_->concentric[ci].tubes.size(); ++t)
      graph_->concentric[ci].tubes[t].relative.set_poses(st.rel_poses[ci][t]);
  }
  refresh();
}

std::vector<QuadPoint> Assembly::quad_points() const {
  std::vector<QuadPoint> out;
  const RobotGraph& g = *graph_;

  std::vector<std::pair<double, double>> rule;
  gauss_rule(gauss_per_span_, rule);
  auto gauss_nodes = [&](double lo, double hi, std::vector<std::pair<double, double>>& sw) {
    double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    for (auto [x, w] : rule) sw.push_back({mid + half * x, half * w});
  };

  auto map_rod_blocks = [&](int body_index, const PointKinematics& pk, QuadPoint& qp) {
    const std::vector<int>& slots = rod_pose_slot_[static_cast<size_t>(body_index)];
    for (size_t l = 0; l < pk.J.size(); ++l) {
      int i = pk.base + static_cast<int>(l);
      int slot = slots[static_cast<size_t>(i)];
      if (slot >= 0) {
        qp.blocks.push_back({slot, pk.J[l], pk.Jp[l]});
      } else if (i == 0) {
        for (const JacEntry& e : base_jac_[static_cast<size_t>(body_index)]) {
          qp.blocks.push_back({e.slot, pk.J[l] * e.map, pk.Jp[l] * e.map});
        }
      }
    }
  };

  for (size_t b = 0; b < g.bodies.size(); ++b) {
    if (!g.bodies[b].is_rod()) continue;
    const SoftRod& rod = g.bodies[b].rod();
    std::vector<double> bp = rod.net.knots().breakpoints();
    std::vector<std::pair<double, double>> nodes;
    for (size_t m = 0; m + 1 < bp.size(); ++m) gauss_nodes(bp[m], bp[m + 1], nodes);
    for (auto [s, w] : nodes) {
      PointKinematics pk = eval_point(rod.net, s, true);
      QuadPoint qp;
      qp.body = static_cast<int>(b);
      qp.s = s;
      qp.w = w;
      qp.g = pk.g;
      qp.xi = pk.xi;
      qp.xi0 = rod.geom.rest_strain(s);
      qp.K = rod.geom.hooke(s);
      qp.Upsilon = rod.geom.viscous(s);
      qp.Mrho = rod.geom.mass_density(s);
      qp.rhoA = rod.geom.density * rod.geom.area(s);
      out.push_back(std::move(qp));
      map_rod_blocks(static_cast<int>(b), pk, out.back());
    }
  }

  for (size_t ci = 0; ci < g.concentric.size(); ++ci) {
    const ConcentricAssembly& ca = g.concentric[ci];
    int main_index = g.body_index(ca.main);
    const SoftRod& main_rod = g.bodies[static_cast<size_t>(main_index)].rod();
    for (size_t t = 0; t < ca.tubes.size(); ++t) {
      const ConcentricTube& tube = ca.tubes[t];
      std::vector<double> bp = tube.relative.knots().breakpoints();
      std::vector<std::pair<double, double>> nodes;
      for (size_t m = 0; m + 1 < bp.size(); ++m) gauss_nodes(bp[m], bp[m + 1], nodes);
      for (auto [s, w] : nodes) {
        ConcentricPoint cp = concentric_fields(main_rod.net, tube, s, true);
        QuadPoint qp;
        qp.body = main_index;
        qp.tube = static_cast<int>(t);
        qp.s = s;
        qp.w = w;
        qp.g = cp.g;
        qp.xi = cp.xi;
        qp.xi0 = tube.geom.rest_strain(s);
        qp.K = tube.geom.hooke(s);
        qp.Upsilon = tube.geom.viscous(s);
        qp.Mrho = tube.geom.mass_density(s);
        qp.rhoA = tube.geom.density * tube.geom.area(s);
        out.push_back(std::move(qp));
        // Main-tube blocks arrive pre-composed by concentric_fields.
        map_rod_blocks(main_index, cp.main, out.back());
        // Relative-rotation blocks restrict to the angular columns.
        for (size_t l = 0; l < cp.rel.J.size(); ++l) {
          int i = cp.rel.base + static_cast<int>(l);
          int slot = rel_slot_[ci][t][static_cast<size_t>(i)];
          out.back().blocks.push_back(
              {slot, cp.rel.J[l].leftCols<3>(), cp.rel.Jp[l].leftCols<3>()});
        }
      }
    }
  }
  return out;
}

FramePoint Assembly::frame(const std::string& body_id, BodyEnd end) const {
  int b = graph_->body_index(body_id);
  if (b < 0) throw DanglingReference("unknown body '" + body_id + "'");
  const Body& body = graph_->bodies[static_cast<size_t>(b)];
  FramePoint fp;
  if (body.is_rod()) {
    const ControlNet& net = body.rod().net;
    fp.g = end == BodyEnd::Tail ? net.pose(net.count() - 1) : net.pose(0);
  } else if (std::holds_alternative<RigidLink>(body.shape)) {
    fp.g = body.rigid().pose;
  } else {
    throw std::invalid_argument("joints have no endpoint frame");
  }
  fp.jac = end_jac(b, end);
  return fp;
}

FramePoint Assembly::station(const std::string& rod_id, double s) const {
  int b = graph_->body_index(rod_id);
  if (b < 0 || !graph_->bodies[static_cast<size_t>(b)].is_rod())
    throw DanglingReference("station requires a rod body");
  const SoftRod& rod = graph_->bodies[static_cast<size_t>(b)].rod();
  PointKinematics pk = eval_point(rod.net, s, true);
  FramePoint fp;
  fp.g = pk.g;
  const std::vector<int>& slots = rod_pose_slot_[static_cast<size_t>(b)];
  for (size_t l = 0; l < pk.J.size(); ++l) {
    int i = pk.base + static_cast<int>(l);
    int slot = slots[static_cast<size_t>(i)];
    if (slot >= 0) {
      fp.jac.push_back({slot, pk.J[l]});
    } else if (i == 0) {
      for (const JacEntry& e : base_jac_[static_cast<size_t>(b)])
        fp.jac.push_back({e.slot, pk.J[l] * e.map});
    }
  }
  return fp;
}

Assembly::ConstraintSystem Assembly::constraints() const {
  ConstraintSystem sys;
  sys.b.resize(mult_);
  for (size_t c = 0; c < graph_->constraints.size(); ++c) {
    const Constraint& con = graph_->constraints[c];
    FramePoint fa = frame(con.body_a, con.end_a);
    FramePoint fb = frame(con.body_b, con.end_b);
    ConstraintEval ev = constraint_eval(con.kind, fa.g, fb.g, con.offset, retraction_);
    int row = constraint_row_[c];
    sys.b.segment(row, ev.b.size()) = ev.b;
    auto add = [&](const Eigen::Matrix<double, Eigen::Dynamic, 6>& jc, const FrameJac& fj) {
      for (const JacEntry& e : fj) {
        Eigen::MatrixXd blockm = jc * e.map;
        const Slot& slot = slots_[static_cast<size_t>(e.slot)];
        for (int r = 0; r < blockm.rows(); ++r)
          for (int col = 0; col < blockm.cols(); ++col)
            if (blockm(r, col) != 0.0)
              sys.jacobian.emplace_back(row + r, slot.offset + col, blockm(r, col));
      }
    };
    add(ev.j1, fa.jac);
    add(ev.j2, fb.jac);
  }
  return sys;
}

}  // namespace corod

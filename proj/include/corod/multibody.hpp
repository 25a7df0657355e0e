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

// Assembly of rods, rigid links and joints into tree-structured robots,
// concentric tube composition, loop-closure constraint functions, and the
// global index map that backs the solvers.

#pragma once

#include <Eigen/Sparse>

#include <string>
#include <variant>
#include <vector>

#include "corod/rod.hpp"

namespace corod {

struct DanglingReference : std::runtime_error {
  explicit DanglingReference(const std::string& what) : std::runtime_error(what) {}
};
struct CycleDetected : std::runtime_error {
  explicit CycleDetected(const std::string& what) : std::runtime_error(what) {}
};
struct OutOfOverlap : std::runtime_error {
  explicit OutOfOverlap(const std::string& what) : std::runtime_error(what) {}
};

enum class BodyEnd { Head, Tail };
enum class JointKind { Spherical, Prismatic };
enum class ConnectionKind { DirectRigid, RigidInsertion, MovableJoint };
enum class ConstraintKind { Fixed, Articulated, Sliding };

struct SoftRod {
  ControlNet net;
  RodGeometry geom;
};

struct RigidLink {
  Pose pose;  // current world pose (derived for connected links)
  Mat6 inertia = Mat6::Zero();
};

struct Joint {
  JointKind kind = JointKind::Prismatic;
  Vec3 axis = Vec3::UnitZ();   // prismatic axis in the joint frame
  Vec3 angles = Vec3::Zero();  // spherical coordinates (rotation vector)
  double displacement = 0.0;   // prismatic coordinate

  Pose pose() const;
  int dof() const { return kind == JointKind::Spherical ? 3 : 1; }
};

struct Body {
  std::string id;
  std::variant<SoftRod, RigidLink, Joint> shape;
  bool clamped = false;  // parentless bodies only: eliminate the base pose

  bool is_rod() const { return std::holds_alternative<SoftRod>(shape); }
  SoftRod& rod() { return std::get<SoftRod>(shape); }
  const SoftRod& rod() const { return std::get<SoftRod>(shape); }
  RigidLink& rigid() { return std::get<RigidLink>(shape); }
  const RigidLink& rigid() const { return std::get<RigidLink>(shape); }
  Joint& joint() { return std::get<Joint>(shape); }
  const Joint& joint() const { return std::get<Joint>(shape); }
};

struct Connection {
  std::string parent;
  std::string child;
  ConnectionKind kind = ConnectionKind::DirectRigid;
  BodyEnd parent_end = BodyEnd::Tail;
  Pose offset;        // rigid insertion / attachment offset
  std::string joint;  // joint body id for MovableJoint
};

struct Constraint {
  ConstraintKind kind = ConstraintKind::Fixed;
  std::string body_a, body_b;
  BodyEnd end_a = BodyEnd::Tail, end_b = BodyEnd::Head;
  Pose offset;  // target offset applied on the a side

  int dim() const { return kind == ConstraintKind::Fixed ? 6 : 3; }
};

// Subordinate tube of a concentric assembly: an SO(3)-relative net over its
// overlap arc inside the main tube's domain.
struct ConcentricTube {
  ControlNet relative;  // SO3Relative, zero translations, knots over [s0, s1]
  RodGeometry geom;
};

struct ConcentricAssembly {
  std::string main;
  std::vector<ConcentricTube> tubes;
};

struct RobotGraph {
  std::vector<Body> bodies;
  std::vector<Connection> connections;
  std::vector<Constraint> constraints;
  std::vector<ConcentricAssembly> concentric;

  Body& body(const std::string& id);
  const Body& body(const std::string& id) const;
  int body_index(const std::string& id) const;  // -1 when missing
};

// Constraint residual and analytic Jacobian blocks w.r.t. both poses,
// b = P ((g2) (-) (g1 * offset)); first-order approximations of dtau^-1 and
// Ad^-1 are substituted when ||b|| < 1e-3.
struct ConstraintEval {
  Eigen::VectorXd b;                              // 6 or 3 entries
  Eigen::Matrix<double, Eigen::Dynamic, 6> j1, j2;
};
ConstraintEval constraint_eval(ConstraintKind kind, const Pose& g1, const Pose& g2,
                               const Pose& offset = Pose::Identity(),
                               Retraction retraction = Retraction::Exponential);

// Composed fields of a subordinate concentric tube at one arclength point.
struct ConcentricPoint {
  Pose g;
  Twist xi;
  PointKinematics main;  // Jacobian blocks already composed with Ad^-1_{g_r}
  PointKinematics rel;
};
ConcentricPoint concentric_fields(const ControlNet& main_net, const ConcentricTube& tube,
                                  double s, bool with_jacobians = true);

// ---------------------------------------------------------------------------
// Global indexing and slot-mapped evaluation.

// What one global slot updates.
struct Slot {
  enum class Target { RodPose, RigidPose, JointCoord, RelativePose } target;
  int body = -1;      // body index (or assembly index for RelativePose)
  int sub = -1;       // control pose index / tube index
  int pose = -1;      // control pose index for RelativePose
  int dim = 6;
  int offset = 0;     // first entry in the global vector
};

// First-order map from global slots to the body-frame variation of a pose:
// delta_zeta = sum_k entry_k.map * delta(slot_k).
struct JacEntry {
  int slot;
  Eigen::Matrix<double, 6, Eigen::Dynamic> map;
};
using FrameJac = std::vector<JacEntry>;

struct FramePoint {
  Pose g;
  FrameJac jac;
};

// One quadrature point of a rod or subordinate tube, with strain-level
// Jacobian blocks mapped onto global slots.
struct QuadBlock {
  int slot;
  Eigen::Matrix<double, 6, Eigen::Dynamic> J, Jp;
};
struct QuadPoint {
  int body = -1;   // body index of the owning rod (main rod for tubes)
  int tube = -1;   // subordinate tube index, -1 for plain rods
  double s = 0.0, w = 0.0;
  Pose g;
  Twist xi = Twist::Zero(), xi0 = Twist::Zero();
  Mat6 K = Mat6::Zero(), Upsilon = Mat6::Zero(), Mrho = Mat6::Zero();
  double rhoA = 0.0;
  std::vector<QuadBlock> blocks;
};

class Assembly {
 public:
  // Validates the graph, propagates connections once and builds the map.
  static Assembly build(RobotGraph& graph, int gauss_per_span = 4);

  int dof() const { return dof_; }
  int multipliers() const { return mult_; }
  int kkt_dim() const { return dof_ + mult_; }
  const std::vector<Slot>& slots() const { return slots_; }
  RobotGraph& graph() { return *graph_; }

  // Re-propagates derived poses after any state change.
  void refresh();

  // Retract every slot-backed quantity by its segment of sigma, then refresh.
  void apply_step(const Eigen::VectorXd& sigma);

  // Snapshot/restore of the full configuration (poses + joint coordinates).
  struct State {
    std::vector<std::vector<Pose>> rod_poses;
    std::vector<Pose> rigid_poses;
    std::vector<Vec3> joint_angles;
    std::vector<double> joint_disp;
    std::vector<std::vector<std::vector<Pose>>> rel_poses;
  };
  State save_state() const;
  void restore_state(const State& st);

  // Material quadrature points of every rod and subordinate tube.
  std::vector<QuadPoint> quad_points() const;

  // Endpoint frame of a body (rod ends, rigid pose) with its slot map.
  FramePoint frame(const std::string& body, BodyEnd end) const;
  // Cross-section frame of a rod at arclength s with its slot map.
  FramePoint station(const std::string& rod, double s) const;

  // Stacked constraint residual and Jacobian triplets (row, col, value).
  struct ConstraintSystem {
    Eigen::VectorXd b;
    std::vector<Eigen::Triplet<double>> jacobian;
  };
  ConstraintSystem constraints() const;

  Retraction retraction() const { return retraction_; }

 private:
  FrameJac end_jac(int body_index, BodyEnd end) const;

  RobotGraph* graph_ = nullptr;
  Retraction retraction_ = Retraction::Exponential;
  int gauss_per_span_ = 3;
  int dof_ = 0, mult_ = 0;
  std::vector<Slot> slots_;
  // per body: slot index per control pose (rods) or pose/joint slot; -1 means
  // eliminated (clamped, shared or derived).
  std::vector<std::vector<int>> rod_pose_slot_;
  std::vector<int> rigid_slot_;
  std::vector<int> joint_slot_;
  // concentric: [assembly][tube][pose] -> slot
  std::vector<std::vector<std::vector<int>>> rel_slot_;
  // derived bases: per body, the jac of its base frame (rod pose 0 or rigid
  // pose), empty when slot-backed or clamped
  std::vector<FrameJac> base_jac_;
  std::vector<int> topo_order_;
  std::vector<int> parent_conn_;  // connection index feeding each body, -1 root
  std::vector<int> constraint_row_;
};

}  // namespace corod

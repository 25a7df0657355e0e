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

#include "corod/statics.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace corod {

namespace {

Twist body_wrench(const Twist& w, WrenchFrame frame, const Pose& g) {
  if (frame == WrenchFrame::Body) return w;
  Twist out;
  out.head<3>() = g.R.transpose() * w.head<3>();
  out.tail<3>() = g.R.transpose() * w.tail<3>();
  return out;
}

// Accumulate -J^T W at a frame into the gradient.
void add_frame_force(const FramePoint& fp, const Twist& w_body, Eigen::VectorXd& grad,
                     const std::vector<Slot>& slots) {
  for (const JacEntry& e : fp.jac) {
    const Slot& slot = slots[static_cast<size_t>(e.slot)];
    grad.segment(slot.offset, e.map.cols()) -= e.map.transpose() * w_body;
  }
}

int joint_slot_offset(const Assembly& assembly, const RobotGraph& g, const std::string& id) {
  int b = g.body_index(id);
  if (b < 0) throw DanglingReference("unknown joint '" + id + "'");
  for (const Slot& s : assembly.slots()) {
    if (s.target == Slot::Target::JointCoord && s.body == b) return s.offset;
  }
  throw DanglingReference("body '" + id + "' has no joint coordinate");
}

// Recompute rod control positions from the stepped rotation field by
// integrating the near-unit-speed tangent between Greville stations. Used as
// an optional line-search candidate: the plain Newton step translates along
// chords where the physical motion follows arcs.
void reproject_rod_positions(RobotGraph& g) {
  for (Body& b : g.bodies) {
    if (!b.is_rod()) continue;
    ControlNet& net = b.rod().net;
    std::vector<double> gr = greville_abscissae(net.knots());
    std::vector<Pose> ps = net.poses();
    for (size_t i = 1; i < ps.size(); ++i) {
      double ds = gr[i] - gr[i - 1];
      Vec3 dir = 0.5 * (ps[i - 1].R.col(0) + ps[i].R.col(0));
      ps[i].p = ps[i - 1].p + ds * dir;
    }
    net.set_poses(ps);
  }
}

}  // namespace

std::vector<CableWrench> cable_wrenches(Assembly& assembly, const Cable& cable) {
  if (cable.via.size() < 2)
    throw std::invalid_argument("cable needs at least two attachments");
  std::vector<Pose> frames;
  std::vector<Vec3> points;
  for (const CableAttachment& at : cable.via) {
    Pose g = assembly.frame(at.body, at.end).g;
    frames.push_back(g);
    points.push_back(g.act(at.point));
  }
  std::vector<CableWrench> out;
  for (size_t i = 0; i + 1 < cable.via.size(); ++i) {
    Vec3 d = points[i + 1] - points[i];
    double len = d.norm();
    if (len < 1e-9) throw DegenerateSegment("cable via points coincide");
    Vec3 f = cable.tension * d / len;  // pull on attachment i toward i+1
    auto wrench_at = [](const Pose& g, const Vec3& local, const Vec3& f_world) {
      Vec3 fb = g.R.transpose() * f_world;
      Twist w;
      w.head<3>() = local.cross(fb);
      w.tail<3>() = fb;
      return w;
    };
    out.push_back({cable.via[i].body, cable.via[i].end,
                   wrench_at(frames[i], cable.via[i].point, f)});
    out.push_back({cable.via[i + 1].body, cable.via[i + 1].end,
                   wrench_at(frames[i + 1], cable.via[i + 1].point, Vec3(-f))});
  }
  return out;
}

StaticEval assemble_static(Assembly& assembly, const LoadSet& loads, bool with_stiffness) {
  const RobotGraph& graph = assembly.graph();
  const std::vector<Slot>& slots = assembly.slots();
  StaticEval ev;
  ev.gradient = Eigen::VectorXd::Zero(assembly.dof());

  std::vector<QuadPoint> pts = assembly.quad_points();
  for (const QuadPoint& q : pts) {
    Twist eps = q.xi - q.xi0;
    Twist lam = q.K * eps;
    ev.internal_energy += 0.5 * q.w * eps.dot(lam);

    Mat6 ad_xi = adjoint_algebra(q.xi);
    std::vector<Eigen::Matrix<double, 6, Eigen::Dynamic>> B;
    B.reserve(q.blocks.size());
    for (const QuadBlock& blk : q.blocks) B.push_back(blk.Jp + ad_xi * blk.J);
    for (size_t i = 0; i < q.blocks.size(); ++i) {
      const Slot& si = slots[static_cast<size_t>(q.blocks[i].slot)];
      ev.gradient.segment(si.offset, B[i].cols()) += q.w * B[i].transpose() * lam;
    }
    if (with_stiffness) {
      for (size_t i = 0; i < q.blocks.size(); ++i) {
        const Slot& si = slots[static_cast<size_t>(q.blocks[i].slot)];
        for (size_t j = 0; j < q.blocks.size(); ++j) {
          const Slot& sj = slots[static_cast<size_t>(q.blocks[j].slot)];
          Eigen::MatrixXd kk = q.w * B[i].transpose() * q.K * B[j];
          for (int r = 0; r < kk.rows(); ++r)
            for (int c = 0; c < kk.cols(); ++c)
              if (kk(r, c) != 0.0)
                ev.stiffness.emplace_back(si.offset + r, sj.offset + c, kk(r, c));
        }
      }
    }

    if (loads.gravity) {
      // Potential -rhoA a_g . p, gradient through the linear rows of J.
      ev.energy -= q.w * q.rhoA * loads.gravity->dot(q.g.p);
      Twist fbar = Twist::Zero();
      fbar.tail<3>() = q.g.R.transpose() * (q.rhoA * (*loads.gravity));
      for (size_t i = 0; i < q.blocks.size(); ++i) {
        const Slot& si = slots[static_cast<size_t>(q.blocks[i].slot)];
        ev.gradient.segment(si.offset, q.blocks[i].J.cols()) -=
            q.w * q.blocks[i].J.transpose() * fbar;
      }
    }
  }
  ev.energy += ev.internal_energy;

  // Distributed wrenches over rods.
  for (const DistributedWrench& dw : loads.distributed) {
    int body = graph.body_index(dw.rod);
    for (const QuadPoint& q : pts) {
      if (q.body != body || q.tube >= 0) continue;
      Twist w = body_wrench(dw.wrench, dw.frame, q.g);
      for (const QuadBlock& blk : q.blocks) {
        const Slot& si = slots[static_cast<size_t>(blk.slot)];
        ev.gradient.segment(si.offset, blk.J.cols()) -= q.w * blk.J.transpose() * w;
      }
      // Spatial constant force has the linear potential -f . p.
      if (dw.frame == WrenchFrame::Spatial)
        ev.energy -= q.w * dw.wrench.tail<3>().dot(q.g.p);
    }
  }

  for (const TipWrench& tw : loads.tip_wrenches) {
    FramePoint fp = assembly.frame(tw.body, tw.end);
    add_frame_force(fp, body_wrench(tw.wrench, tw.frame, fp.g), ev.gradient, slots);
    if (tw.frame == WrenchFrame::Spatial) ev.energy -= tw.wrench.tail<3>().dot(fp.g.p);
  }
  for (const PointWrench& pw : loads.point_wrenches) {
    FramePoint fp = assembly.station(pw.rod, pw.s);
    add_frame_force(fp, body_wrench(pw.wrench, pw.frame, fp.g), ev.gradient, slots);
    if (pw.frame == WrenchFrame::Spatial) ev.energy -= pw.wrench.tail<3>().dot(fp.g.p);
  }
  for (const Cable& cable : loads.cables) {
    for (const CableWrench& cw : cable_wrenches(assembly, cable)) {
      FramePoint fp = assembly.frame(cw.body, cw.end);
      add_frame_force(fp, cw.wrench, ev.gradient, slots);
    }
  }
  for (const auto& [joint, force] : loads.joint_forces) {
    int off = joint_slot_offset(assembly, graph, joint);
    ev.gradient(off) -= force;
    // Conservative along the slide: potential -force * displacement.
    ev.energy -= force * graph.body(joint).joint().displacement;
  }

  Assembly::ConstraintSystem cs = assembly.constraints();
  ev.b = std::move(cs.b);
  ev.A = std::move(cs.jacobian);
  return ev;
}

double internal_energy(Assembly& assembly) {
  LoadSet none;
  return assemble_static(assembly, none, false).internal_energy;
}

double potential_energy(Assembly& assembly, const LoadSet& loads) {
  return assemble_static(assembly, loads, false).energy;
}

StaticResult solve_static(Assembly& assembly, const LoadSet& loads,
                          const NewtonSettings& settings) {
  StaticResult result;
  assembly.refresh();

  double lambda = settings.damping;
  StaticEval ev = assemble_static(assembly, loads, true);
  double penalty = 1.0;
  bool tail_mode = false;

  // Exact-penalty merit on the energy; a residual-norm decrease is also
  // accepted so non-conservative load cases keep progressing.
  auto merit = [&penalty](const StaticEval& e) {
    return e.energy + penalty * e.b.lpNorm<1>();
  };
  // Stationarity is measured on the Lagrangian gradient r + A^T mu with the
  // least-squares multipliers: at a constrained equilibrium the raw gradient
  // equals the constraint reaction and does not vanish.
  const int m_rows = assembly.multipliers();
  auto ls_multipliers = [&](const StaticEval& e) -> Eigen::VectorXd {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m_rows, assembly.dof());
    for (const auto& t : e.A) A(t.row(), t.col()) += t.value();
    Eigen::MatrixXd AAt = A * A.transpose();
    AAt.diagonal().array() += 1e-12 * (1.0 + AAt.diagonal().maxCoeff());
    return AAt.ldlt().solve(-A * e.gradient);
  };
  auto lagrangian_gradient = [&](const StaticEval& e,
                                 const Eigen::VectorXd& mu) -> Eigen::VectorXd {
    Eigen::VectorXd g = e.gradient;
    for (const auto& t : e.A) g(t.col()) += t.value() * mu(t.row());
    return g;
  };
  auto lagrangian_residual = [&](const StaticEval& e) -> double {
    if (m_rows == 0) return e.gradient.norm();
    return lagrangian_gradient(e, ls_multipliers(e)).norm();
  };
  auto grad_merit = [&](const StaticEval& e) {
    double rl = lagrangian_residual(e);
    return 0.5 * (rl * rl + e.b.squaredNorm());
  };

  for (int it = 0; it < settings.max_iterations; ++it) {
    result.residual_norm = lagrangian_residual(ev);
    result.constraint_norm = ev.b.norm();
    result.energy = ev.energy;
    result.iterations = it;
    if (result.residual_norm <= settings.tol_residual &&
        result.constraint_norm <= settings.tol_constraint) {
      result.status = SolveStatus::Converged;
      return result;
    }

    double tr = 0.0;
    for (const auto& t : ev.stiffness)
      if (t.row() == t.col()) tr += t.value();
    double lambda_floor = 1e-9;
    (void)tr;
    if (lambda < 0.0) lambda = 1e-4;

    KKTSystem sys;
    sys.n = assembly.dof();
    sys.m = assembly.multipliers();
    sys.H = ev.stiffness;
    Eigen::VectorXd dk = Eigen::VectorXd::Zero(sys.n);
    for (const auto& t : ev.stiffness)
      if (t.row() == t.col()) dk(t.row()) += t.value();
    double dmean = dk.sum() / std::max(1, sys.n);
    sys.A = ev.A;
    sys.r = ev.gradient;
    sys.b = ev.b;

    double phi0 = merit(ev);
    double psi0 = grad_merit(ev);
    if (getenv("COROD_DEBUG_NEWTON"))
      fprintf(stderr, "== it %d r=%.4e phi0=%.12f tail=%d\n", it,
              result.residual_norm, phi0, (int)tail_mode);
    Assembly::State st = assembly.save_state();
    bool accepted = false;
    double scale = 1.0;
    if (settings.line_search) {
      // Trust-region flavored search: candidate directions from a small
      // damping ladder, each swept over halved step scales; the best merit
      // wins. Large-deformation first steps overshoot badly otherwise.
      // Two-tier candidate selection: candidates that decrease the energy
      // merit compete on it; if none exists this iteration (non-conservative
      // loads, constraint-closing phases), gradient-merit improvers compete
      // instead.
      struct Candidate {
        double alpha = 0.0, lambda = 0.0;
        Eigen::VectorXd sigma, mu;
        bool project = false;
      };
      Candidate best_energy, best_gradient;
      double best_merit = phi0, best_grad = psi0;
      double tiny = 1e-12 * (1.0 + std::abs(phi0));
      auto sweep = [&](const Eigen::VectorXd& dir, const Eigen::VectorXd& mu,
                       double lam_used) {
        double alpha = 2.0;
        for (int half = 0; half <= settings.max_halvings + 1; ++half) {
          for (int project = 0; project <= (tail_mode ? 0 : 1); ++project) {
            try {
              assembly.apply_step(alpha * dir);
              if (project) {
                reproject_rod_positions(assembly.graph());
                assembly.refresh();
              }
              StaticEval trial = assemble_static(assembly, loads, false);
              double mt = merit(trial), gt = grad_merit(trial);
              if (getenv("COROD_DEBUG_NEWTON"))
                fprintf(stderr, "    cand lam=%g a=%.4f proj=%d mt=%.12f gt=%.4e\n",
                        lam_used, alpha, project, mt, gt);
              if (mt < best_merit - tiny) {
                best_merit = mt;
                best_energy = {alpha, lam_used, dir, mu, project != 0};
              }
              if (gt < best_grad) {
                best_grad = gt;
                best_gradient = {alpha, lam_used, dir, mu, project != 0};
              }
            } catch (const std::exception& e) {
              // retraction left its injectivity region: reject this scale
              if (getenv("COROD_DEBUG_NEWTON"))
                fprintf(stderr, "    cand lam=%g a=%.4f proj=%d THROW %s\n", lam_used,
                        alpha, project, e.what());
            }
            assembly.restore_state(st);
          }
          alpha *= 0.5;
          if (best_energy.alpha > 0.0 && alpha < 0.2 * best_energy.alpha) break;
        }
      };
      bool use_exact = tail_mode && assembly.dof() <= settings.exact_newton_max_dof &&
                       ev.b.norm() <= std::max(1e-6, 100.0 * settings.tol_constraint);
      for (double lam_try :
           {lambda, 10.0 * lambda, 100.0 * lambda, lambda / 10.0, lambda / 100.0}) {
        if (lam_try < lambda_floor) continue;
        KKTSystem trial_sys = sys;
        for (int i = 0; i < sys.n; ++i)
          trial_sys.H.emplace_back(i, i, lam_try * (dk(i) + 1e-3 * dmean));
        KKTSolution sol;
        try {
          sol = solve_kkt(trial_sys, settings.force_dense, settings.force_sparse);
        } catch (const SingularKKT& e) {
          if (getenv("COROD_DEBUG_NEWTON"))
            fprintf(stderr, "  kkt lam=%g THROW %s\n", lam_try, e.what());
          continue;
        }
        if (result.multipliers.size() == 0) result.multipliers = sol.mu;
        penalty = 1.0 + 10.0 * (sol.mu.size() > 0 ? sol.mu.lpNorm<Eigen::Infinity>() : 0.0);
        sweep(sol.sigma, sol.mu, lam_try);
      }
      if (use_exact) {
        // Exact Hessian of the Lagrangian by central differences of the
        // gradient with frozen least-squares multipliers; the constraint
        // curvature term is what makes the constrained tail quadratic.
        const int n = sys.n;
        double h = 1e-6;
        Eigen::VectorXd mu_hat =
            m_rows > 0 ? ls_multipliers(ev) : Eigen::VectorXd::Zero(0);
        Eigen::MatrixXd Hfd(n, n);
        for (int c = 0; c < n; ++c) {
          Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
          d(c) = h;
          assembly.apply_step(d);
          StaticEval ep = assemble_static(assembly, loads, false);
          Eigen::VectorXd gp = m_rows > 0 ? lagrangian_gradient(ep, mu_hat) : ep.gradient;
          assembly.restore_state(st);
          assembly.apply_step(-d);
          StaticEval em = assemble_static(assembly, loads, false);
          Eigen::VectorXd gm = m_rows > 0 ? lagrangian_gradient(em, mu_hat) : em.gradient;
          assembly.restore_state(st);
          Hfd.col(c) = (gp - gm) / (2.0 * h);
        }
        KKTSystem esys;
        esys.n = sys.n;
        esys.m = sys.m;
        esys.A = sys.A;
        esys.r = sys.r;
        esys.b = sys.b;
        for (int r = 0; r < n; ++r)
          for (int c = 0; c < n; ++c) {
            double v = 0.5 * (Hfd(r, c) + Hfd(c, r));
            if (r == c) v += lambda_floor * (dk(r) + 1e-3 * dmean);
            if (v != 0.0) esys.H.emplace_back(r, c, v);
          }
        KKTSolution sol;
        bool ok = true;
        try {
          sol = solve_kkt(esys, settings.force_dense, settings.force_sparse);
        } catch (const SingularKKT&) {
          ok = false;
        }
        if (ok) sweep(sol.sigma, sol.mu, lambda);
      }
      const Candidate& chosen = best_energy.alpha > 0.0 ? best_energy : best_gradient;
      if (chosen.alpha > 0.0) {
        scale = chosen.alpha;
        lambda = std::max(chosen.lambda, lambda_floor);
        result.multipliers = chosen.mu;
        assembly.apply_step(scale * chosen.sigma);
        if (chosen.project) {
          reproject_rod_positions(assembly.graph());
          assembly.refresh();
        }
        ev = assemble_static(assembly, loads, true);
        accepted = true;
        if (scale >= 0.99 && !chosen.project) tail_mode = true;
      }
    } else {
      KKTSystem trial_sys = sys;
      for (int i = 0; i < sys.n; ++i)
        trial_sys.H.emplace_back(i, i, lambda * (dk(i) + 1e-3 * dmean));
      KKTSolution sol;
      try {
        sol = solve_kkt(trial_sys, settings.force_dense, settings.force_sparse);
        result.multipliers = sol.mu;
        assembly.apply_step(sol.sigma);
        ev = assemble_static(assembly, loads, true);
        accepted = true;
      } catch (const std::exception&) {
        assembly.restore_state(st);
      }
    }
    if (!accepted) {
      // No decrease even at the smallest step: raise the damping and retry
      // from the same configuration.
      lambda *= 10.0;
      scale = 0.0;
      if (lambda > 1e12) {
        result.status = SolveStatus::SingularSystem;
        return result;
      }
    }
    result.trace.push_back(
        {it, result.residual_norm, result.constraint_norm, result.energy, scale});
  }
  result.status = SolveStatus::MaxIterationsExceeded;
  return result;
}

}  // namespace corod

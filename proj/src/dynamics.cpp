/****************************************************************************
 * Copyright 2026 the legdyn authors.
 * This library is distributed under the terms of the Apache V2.0
 * License (obtainable from http://www.apache.org/licenses/LICENSE-2.0).
 ****************************************************************************/
#include "legdyn/dynamics.hpp"

#include <Eigen/Cholesky>

#include <stdexcept>

namespace legdyn {

namespace {

// Per-leg closed-form blocks, existence-weighted over the present prefix.
// Partial sums dbb/dbt/dtt[k] hold Σ_{j ≥ k} ∂M_ij/∂θ_ik, which is what both
// the Ṁ term and the momentum-gradient rows of the Coriolis matrix consume.
struct LegBlocks {
  int width = 0;  // present prefix length
  Matrix6d bb = Matrix6d::Zero();
  LegJacobian bt;
  MatNN tt;
  std::vector<Matrix6d> dbb;
  std::vector<LegJacobian> dbt;
  std::vector<MatNN> dtt;
  Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 8, 1> ntheta;
  Vector6d nbody = Vector6d::Zero();
  bool has_tip = false;
  Matrix6d tip_ad_inv;
  LegJacobian tip_jac;
};

void compute_leg(const LegGeometry& geom, const LegSweep& sweep, const Vector3d& gravity_body,
                 bool want_partials, bool want_tip, LegBlocks& out) {
  const int p = sweep.link_count();
  out.width = p;
  out.bb.setZero();
  out.bt = LegJacobian::Zero(6, p);
  out.tt = MatNN::Zero(p, p);
  out.nbody.setZero();
  out.ntheta.setZero(p);
  if (want_partials) {
    out.dbb.assign(p, Matrix6d::Zero());
    out.dbt.assign(p, LegJacobian::Zero(6, p));
    out.dtt.assign(p, MatNN::Zero(p, p));
  }

  LegJacobian jac = LegJacobian::Zero(6, p);
  LegJacobian djac = LegJacobian::Zero(6, p);
  for (int link = 0; link < p; ++link) {
    jac.col(link) = sweep.instantaneous_screw(link + 1);

    const Matrix6d& acc = sweep.ad_product_inverse(link + 1);
    const Matrix6d inertia_acc = geom.inertia_body[link] * acc;
    const Matrix6d bb = acc.transpose() * inertia_acc;
    const LegJacobian bt = bb * jac;
    out.bb += bb;
    out.bt += bt;
    out.tt += jac.transpose() * bt;

    // Gravity wrench of the link in the body frame; 𝒩 collects its gradient.
    const Vector3d com = sweep.link_pose(geom, link).position;
    Vector6d wrench;
    wrench.head<3>() = -geom.mass[link] * gravity_body;
    wrench.tail<3>() = com.cross(wrench.head<3>());
    out.nbody += wrench;
    out.ntheta += jac.transpose() * wrench;

    if (!want_partials) continue;
    for (int k = 0; k <= link; ++k) {
      // ∂Ad⁻¹-product: −(Ad from joint k+1..link+1)⁻¹ · ad_{ξ_k} · (Ad of the
      // preceding product)⁻¹, with the empty leading product = identity.
      const Matrix6d acc_kj = sweep.ad_product_inverse(link + 1) * sweep.ad_product(k);
      const Matrix6d dacc =
          -acc_kj * ad_of(geom.screws[k]) * sweep.ad_product_inverse(k);
      const Matrix6d s = dacc.transpose() * inertia_acc;
      const Matrix6d dbb = s + s.transpose();

      // Jacobian columns past joint k rotate with it: ∂ξ'_β = [ξ'_k, ξ'_β].
      djac.setZero();
      const Matrix6d bracket = ad_of(sweep.instantaneous_screw(k + 1));
      for (int b = k + 1; b <= link; ++b)
        djac.col(b) = bracket * sweep.instantaneous_screw(b + 1);

      const LegJacobian dbt = dbb * jac + bb * djac;
      const LegJacobian x = bt.transpose() * djac;  // (dJᵀ bt)ᵀ
      out.dbb[k] += dbb;
      out.dbt[k] += dbt;
      out.dtt[k] += x + x.transpose() + jac.transpose() * (dbb * jac);
    }
  }

  out.has_tip = want_tip;
  if (want_tip) {
    out.tip_ad_inv = adjoint_inverse_of(sweep.tip_pose(geom));
    out.tip_jac = sweep.tip_jacobian(geom);
  }
}

// Column/row placement for one assembly flavour: directly reduced, or at the
// healthy dimensions with absent slots left zero (reshaped afterwards).
struct AssemblyMap {
  int dof;
  int tip_rows;
  std::vector<int> joint_base;  // column of each leg's first joint, minus 6
  std::vector<int> tip_block;   // row block of each leg's tip, or -1
};

AssemblyMap reduced_map(const RobotModel& model, const ReducedIndex& idx) {
  AssemblyMap map;
  map.dof = idx.dof();
  map.tip_rows = 6 * idx.tip_count();
  for (int i = 0; i < model.leg_count(); ++i) {
    map.joint_base.push_back(idx.leg_joint_base(i));
    map.tip_block.push_back(idx.tip_block(i));
  }
  return map;
}

AssemblyMap full_map(const RobotModel& model) {
  AssemblyMap map;
  map.dof = 6 + model.total_dof();
  map.tip_rows = 6 * model.leg_count();
  for (int i = 0; i < model.leg_count(); ++i) {
    map.joint_base.push_back(model.joint_offset(i));
    map.tip_block.push_back(i);
  }
  return map;
}

void assemble(const RobotModel& model, const ReducedIndex& idx, const AssemblyMap& map,
              const Pose& body_pose, const Eigen::VectorXd& theta,
              const Eigen::VectorXd& v_assembled, std::vector<LegSweep>& sweeps,
              StructuralMatrices& out) {
  const int d = map.dof;
  const int nlegs = model.leg_count();
  static thread_local std::vector<LegBlocks> blocks;
  blocks.resize(nlegs);
  sweeps.resize(nlegs);

  const Vector3d gravity_body = body_pose.rotation.transpose() * model.gravity();

  out.mass.setZero(d, d);
  out.coriolis.setZero(d, d);
  out.potential.setZero(d);
  out.contact_jacobian.setZero(map.tip_rows, d);

  out.mass.topLeftCorner<6, 6>() = model.body_inertia();
  out.potential.head<3>() = -model.body_mass() * gravity_body;

  for (int i = 0; i < nlegs; ++i) {
    const int p = idx.present_links(i);
    if (p == 0) continue;
    const LegGeometry& geom = model.leg(i);
    sweeps[i].build(geom, theta.data() + model.joint_offset(i), p);
    compute_leg(geom, sweeps[i], gravity_body, true, idx.tip_present(i), blocks[i]);

    const int cb = 6 + map.joint_base[i];
    out.mass.topLeftCorner<6, 6>() += blocks[i].bb;
    out.mass.block(0, cb, 6, p) = blocks[i].bt;
    out.mass.block(cb, 0, p, 6) = blocks[i].bt.transpose();
    out.mass.block(cb, cb, p, p) = blocks[i].tt;

    out.potential.head<6>() += blocks[i].nbody;
    out.potential.segment(cb, p) = blocks[i].ntheta;

    if (blocks[i].has_tip) {
      const int row = 6 * map.tip_block[i];
      out.contact_jacobian.block<6, 6>(row, 0) = blocks[i].tip_ad_inv;
      out.contact_jacobian.block(row, cb, 6, p) = blocks[i].tip_ad_inv * blocks[i].tip_jac;
    }
  }

  // Coriolis: Ṁ-style term from the weighted partials, then the momentum
  // correction −½[ℬ 0; 𝒟 ℰ].
  const Eigen::VectorXd momentum = out.mass * v_assembled;
  const Vector3d p_v = momentum.head<3>();
  const Vector3d p_w = momentum.segment<3>(3);
  const Eigen::Matrix<double, 6, 1> body_twist = v_assembled.head<6>();

  out.coriolis.block<3, 3>(0, 3) -= skew(p_v);
  out.coriolis.block<3, 3>(3, 0) -= skew(p_v);
  out.coriolis.block<3, 3>(3, 3) -= skew(p_w);

  for (int i = 0; i < nlegs; ++i) {
    const int p = idx.present_links(i);
    if (p == 0) continue;
    const int cb = 6 + map.joint_base[i];
    const auto theta_dot = v_assembled.segment(cb, p);
    const LegBlocks& leg = blocks[i];

    for (int k = 0; k < p; ++k) {
      const double rate = theta_dot[k];
      if (rate != 0.0) {
        out.coriolis.topLeftCorner<6, 6>() += leg.dbb[k] * rate;
        out.coriolis.block(0, cb, 6, p) += leg.dbt[k] * rate;
        out.coriolis.block(cb, 0, p, 6) += leg.dbt[k].transpose() * rate;
        out.coriolis.block(cb, cb, p, p) += leg.dtt[k] * rate;
      }
      const Vector6d dp_body = leg.dbb[k] * body_twist + leg.dbt[k] * theta_dot;
      const Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 8, 1> dp_joint =
          leg.dbt[k].transpose() * body_twist + leg.dtt[k] * theta_dot;
      out.coriolis.block(cb + k, 0, 1, 6) -= 0.5 * dp_body.transpose();
      out.coriolis.block(cb + k, cb, 1, p) -= 0.5 * dp_joint.transpose();
    }
  }
}

LegSweep full_sweep(const RobotModel& model, int leg, int links,
                    const Eigen::VectorXd& theta_leg) {
  if (links > model.leg_dof(leg)) throw std::out_of_range("link index exceeds the leg DoF");
  LegSweep sweep;
  sweep.build(model.leg(leg), theta_leg.data(), links);
  return sweep;
}

}  // namespace

Eigen::VectorXd solve_mass(const Eigen::MatrixXd& mass, const Eigen::VectorXd& rhs) {
  Eigen::LLT<Eigen::MatrixXd> llt(mass);
  if (llt.info() != Eigen::Success)
    throw SingularMassError("mass matrix factorization failed");
  Eigen::VectorXd x = llt.solve(rhs);
  x += llt.solve(rhs - mass * x);  // one refinement pass tightens the residual
  return x;
}

LinkMassBlocks link_mass(const RobotModel& model, int leg, int link,
                         const Eigen::VectorXd& theta_leg) {
  const LegGeometry& geom = model.leg(leg);
  const LegSweep sweep = full_sweep(model, leg, link + 1, theta_leg);

  LinkMassBlocks out;
  const Matrix6d& acc = sweep.ad_product_inverse(link + 1);
  out.bb = acc.transpose() * geom.inertia_body[link] * acc;
  const LegJacobian jac = sweep.body_jacobian(geom, link);
  out.btheta = out.bb * jac;
  out.thetatheta = jac.transpose() * out.btheta;
  return out;
}

LinkMassBlocks mass_partials(const RobotModel& model, int leg, int link,
                             const Eigen::VectorXd& theta_leg, int k) {
  const LegGeometry& geom = model.leg(leg);
  LinkMassBlocks out;
  out.bb.setZero();
  out.btheta = LegJacobian::Zero(6, geom.dof);
  out.thetatheta = MatNN::Zero(geom.dof, geom.dof);
  if (k > link) return out;  // the partial vanishes strictly above the link index

  const LegSweep sweep = full_sweep(model, leg, link + 1, theta_leg);
  const Matrix6d& acc = sweep.ad_product_inverse(link + 1);
  const Matrix6d inertia_acc = geom.inertia_body[link] * acc;
  const Matrix6d bb = acc.transpose() * inertia_acc;
  const LegJacobian jac = sweep.body_jacobian(geom, link);
  const LegJacobian bt = bb * jac;

  const Matrix6d acc_kj = sweep.ad_product_inverse(link + 1) * sweep.ad_product(k);
  const Matrix6d dacc = -acc_kj * ad_of(geom.screws[k]) * sweep.ad_product_inverse(k);
  const Matrix6d s = dacc.transpose() * inertia_acc;
  out.bb = s + s.transpose();

  LegJacobian djac = LegJacobian::Zero(6, geom.dof);
  const Matrix6d bracket = ad_of(sweep.instantaneous_screw(k + 1));
  for (int b = k + 1; b <= link; ++b)
    djac.col(b) = bracket * sweep.instantaneous_screw(b + 1);

  out.btheta = out.bb * jac + bb * djac;
  const LegJacobian x = bt.transpose() * djac;
  out.thetatheta = x + x.transpose() + jac.transpose() * (out.bb * jac);
  return out;
}

NaiveEvaluator::NaiveEvaluator(const RobotModel& model, const MorphologyVectors& mv)
    : model_(&model), mv_(mv), idx_(model, mv) {}

void NaiveEvaluator::set_morphology(const MorphologyVectors& mv) {
  mv_ = mv;
  idx_ = ReducedIndex(*model_, mv);
}

const StructuralMatrices& NaiveEvaluator::evaluate(const RobotState& state) {
  const Eigen::VectorXd v_red = idx_.gather_velocity(state.v);
  assemble(*model_, idx_, reduced_map(*model_, idx_), state.body_pose, state.theta, v_red,
           sweeps_, out_);
  return out_;
}

Eigen::MatrixXd assemble_mass(const RobotModel& model, const MorphologyVectors& mv,
                              const Eigen::VectorXd& theta) {
  NaiveEvaluator eval(model, mv);
  RobotState state = RobotState::zero(model);
  state.theta = theta;
  return eval.evaluate(state).mass;
}

Eigen::MatrixXd coriolis(const RobotModel& model, const MorphologyVectors& mv,
                         const Eigen::VectorXd& theta, const Eigen::VectorXd& v_reduced) {
  NaiveEvaluator eval(model, mv);
  RobotState state = RobotState::zero(model);
  state.theta = theta;
  eval.reduced().scatter_velocity(v_reduced, state.v);
  return eval.evaluate(state).coriolis;
}

Eigen::VectorXd potential_forces(const RobotModel& model, const MorphologyVectors& mv,
                                 const Pose& body_pose, const Eigen::VectorXd& theta) {
  NaiveEvaluator eval(model, mv);
  RobotState state = RobotState::zero(model);
  state.body_pose = body_pose;
  state.theta = theta;
  return eval.evaluate(state).potential;
}

Eigen::VectorXd forward_dynamics(const RobotModel& model, const MorphologyVectors& mv,
                                 const Pose& body_pose, const Eigen::VectorXd& theta,
                                 const Eigen::VectorXd& v_reduced,
                                 const Eigen::VectorXd& tau_reduced,
                                 const Eigen::VectorXd& tip_wrenches) {
  NaiveEvaluator eval(model, mv);
  RobotState state = RobotState::zero(model);
  state.body_pose = body_pose;
  state.theta = theta;
  eval.reduced().scatter_velocity(v_reduced, state.v);
  const StructuralMatrices& sm = eval.evaluate(state);

  Eigen::VectorXd rhs = tau_reduced - sm.coriolis * v_reduced - sm.potential;
  if (tip_wrenches.size() > 0) rhs += sm.contact_jacobian.transpose() * tip_wrenches;
  return solve_mass(sm.mass, rhs);
}

StructuralMatrices reconfigure(const RobotModel& model, const MorphologyVectors& mv,
                               const RobotState& state) {
  const ReducedIndex idx(model, mv);
  std::vector<LegSweep> sweeps;
  StructuralMatrices full;
  assemble(model, idx, full_map(model), state.body_pose, state.theta, state.v, sweeps, full);

  // Reshape: drop rows/columns of absent joints and rows of absent tips.
  std::vector<int> keep{0, 1, 2, 3, 4, 5};
  for (int g : idx.present_joints()) keep.push_back(6 + g);
  const int d = static_cast<int>(keep.size());

  StructuralMatrices out;
  out.mass.resize(d, d);
  out.coriolis.resize(d, d);
  out.potential.resize(d);
  out.contact_jacobian.resize(6 * idx.tip_count(), d);
  for (int c = 0; c < d; ++c) {
    for (int r = 0; r < d; ++r) {
      out.mass(r, c) = full.mass(keep[r], keep[c]);
      out.coriolis(r, c) = full.coriolis(keep[r], keep[c]);
    }
    out.potential[c] = full.potential[keep[c]];
    int row_out = 0;
    for (int i = 0; i < model.leg_count(); ++i) {
      if (!idx.tip_present(i)) continue;
      out.contact_jacobian.block<6, 1>(6 * row_out, c) =
          full.contact_jacobian.block<6, 1>(6 * i, keep[c]);
      ++row_out;
    }
  }
  return out;
}

double gravity_potential(const RobotModel& model, const MorphologyVectors& mv,
                         const Pose& body_pose, const Eigen::VectorXd& theta) {
  const ReducedIndex idx(model, mv);
  double u = -model.body_mass() * model.gravity().dot(body_pose.position);
  for (int i = 0; i < model.leg_count(); ++i) {
    const int p = idx.present_links(i);
    if (p == 0) continue;
    const LegGeometry& geom = model.leg(i);
    LegSweep sweep;
    sweep.build(geom, theta.data() + model.joint_offset(i), p);
    for (int link = 0; link < p; ++link) {
      const Vector3d com = body_pose.act(sweep.link_pose(geom, link).position);
      u -= geom.mass[link] * model.gravity().dot(com);
    }
  }
  return u;
}

double total_energy(const RobotModel& model, const MorphologyVectors& mv,
                    const RobotState& state) {
  NaiveEvaluator eval(model, mv);
  const Eigen::VectorXd v_red = eval.reduced().gather_velocity(state.v);
  const Eigen::MatrixXd mass = eval.evaluate(state).mass;
  return 0.5 * v_red.dot(mass * v_red) +
         gravity_potential(model, mv, state.body_pose, state.theta);
}

namespace detail {
Momentum split_momentum(const Eigen::VectorXd& generalized, int joint_count) {
  Momentum p;
  p.linear = generalized.head<3>();
  p.angular = generalized.segment<3>(3);
  p.joint = generalized.tail(joint_count);
  return p;
}
}  // namespace detail

}  // namespace legdyn

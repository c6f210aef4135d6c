/****************************************************************************
 * Copyright 2026 the legdyn authors.
 * This library is distributed under the terms of the Apache V2.0
 * License (obtainable from http://www.apache.org/licenses/LICENSE-2.0).
 ****************************************************************************/
#include "legdyn/fastdyn.hpp"

namespace legdyn {

FastEvaluator::FastEvaluator(const RobotModel& model, const MorphologyVectors& mv,
                             std::vector<LegDecomposition> catalog)
    : model_(&model), mv_(mv), idx_(model, mv), catalog_(std::move(catalog)) {
  if (static_cast<int>(catalog_.size()) != model.catalog_size())
    throw SchemaError("decomposition count does not match the catalog");
  int gamma_max = 1;
  for (int i = 0; i < model.leg_count(); ++i) {
    const auto& att = model.attachment(i);
    legs_.push_back(instantiate(catalog_[att.catalog_index], att.hip));
    gamma_max = std::max(gamma_max, catalog_[att.catalog_index].basis.size());
  }
  values_.resize(gamma_max);
  dvalues_.resize(gamma_max);
}

FastEvaluator FastEvaluator::build(const RobotModel& model, const MorphologyVectors& mv) {
  std::vector<LegDecomposition> catalog;
  for (int a = 0; a < model.catalog_size(); ++a)
    catalog.push_back(decompose_leg(model.catalog_entry(a)));
  return FastEvaluator(model, mv, std::move(catalog));
}

void FastEvaluator::set_morphology(const MorphologyVectors& mv) {
  mv_ = mv;
  idx_ = ReducedIndex(*model_, mv);
}

const StructuralMatrices& FastEvaluator::evaluate(const RobotState& state) {
  const int d = idx_.dof();
  out_.mass.setZero(d, d);
  out_.coriolis.setZero(d, d);
  out_.potential.setZero(d);
  out_.contact_jacobian.setZero(6 * idx_.tip_count(), d);

  const Eigen::VectorXd v_red = idx_.gather_velocity(state.v);
  const Eigen::Matrix<double, 6, 1> body_twist = v_red.head<6>();
  const Vector3d gravity_body = state.body_pose.rotation.transpose() * model_->gravity();

  out_.mass.topLeftCorner<6, 6>() = model_->body_inertia();
  out_.potential.head<3>() = -model_->body_mass() * gravity_body;

  Matrix6d bb;
  Eigen::Matrix<double, 6, Eigen::Dynamic, Eigen::ColMajor, 6, 8> bt(6, 8);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 8, 8> tt(8, 8);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 8, 3> nt(8, 3);
  Matrix3d ng;
  Eigen::Matrix<double, 6, Eigen::Dynamic, Eigen::ColMajor, 6, 14> tip(6, 14);

  for (int i = 0; i < model_->leg_count(); ++i) {
    const int p = idx_.present_links(i);
    if (p == 0) continue;
    const InstancedLeg& leg = legs_[i];
    const int n = leg.dof;
    const int cb = 6 + idx_.leg_joint_base(i);
    const double* theta = state.theta.data() + model_->joint_offset(i);
    double* values = values_.data();
    leg.basis->evaluate(theta, values);

    bt.resize(6, p);
    tt.resize(p, p);
    nt.resize(p, 3);
    const int q = p - 1;
    leg.prefix_bb[q].evaluate(values, bb.data());
    leg.prefix_bt[q].evaluate(values, bt.data());
    leg.prefix_tt[q].evaluate(values, tt.data());
    leg.prefix_ntheta[q].evaluate(values, nt.data());
    leg.prefix_ng[q].evaluate(values, ng.data());

    out_.mass.topLeftCorner<6, 6>() += bb;
    out_.mass.block(0, cb, 6, p) = bt;
    out_.mass.block(cb, 0, p, 6) = bt.transpose();
    out_.mass.block(cb, cb, p, p) = tt;

    out_.potential.head<3>() -= leg.prefix_mass[q] * gravity_body;
    out_.potential.segment<3>(3) -= ng * gravity_body;
    out_.potential.segment(cb, p) = nt * gravity_body;

    if (idx_.tip_present(i)) {
      tip.resize(6, 6 + n);
      leg.tip_jacobian.evaluate(values, tip.data());
      const int row = 6 * idx_.tip_block(i);
      out_.contact_jacobian.block<6, 6>(row, 0) = tip.leftCols<6>();
      out_.contact_jacobian.block(row, cb, 6, n) = tip.rightCols(n);
    }

    // Mass partials against the precomputed basis-derivative vectors feed
    // both the Ṁ-style term and the momentum-gradient rows.
    const auto theta_dot = v_red.segment(cb, p);
    for (int k = 0; k < p; ++k) {
      leg.basis->evaluate_derivative(k, values, dvalues_.data());
      Matrix6d dbb;
      Eigen::Matrix<double, 6, Eigen::Dynamic, Eigen::ColMajor, 6, 8> dbt(6, p);
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 8, 8> dtt(p, p);
      leg.prefix_bb[q].evaluate(dvalues_.data(), dbb.data());
      leg.prefix_bt[q].evaluate(dvalues_.data(), dbt.data());
      leg.prefix_tt[q].evaluate(dvalues_.data(), dtt.data());

      const double rate = theta_dot[k];
      if (rate != 0.0) {
        out_.coriolis.topLeftCorner<6, 6>() += dbb * rate;
        out_.coriolis.block(0, cb, 6, p) += dbt * rate;
        out_.coriolis.block(cb, 0, p, 6) += dbt.transpose() * rate;
        out_.coriolis.block(cb, cb, p, p) += dtt * rate;
      }
      const Vector6d dp_body = dbb * body_twist + dbt * theta_dot;
      const Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 8, 1> dp_joint =
          dbt.transpose() * body_twist + dtt * theta_dot;
      out_.coriolis.block(cb + k, 0, 1, 6) -= 0.5 * dp_body.transpose();
      out_.coriolis.block(cb + k, cb, 1, p) -= 0.5 * dp_joint.transpose();
    }
  }

  const Eigen::VectorXd momentum = out_.mass * v_red;
  out_.coriolis.block<3, 3>(0, 3) -= skew(momentum.head<3>());
  out_.coriolis.block<3, 3>(3, 0) -= skew(momentum.head<3>());
  out_.coriolis.block<3, 3>(3, 3) -= skew(momentum.segment<3>(3));
  return out_;
}

}  // namespace legdyn

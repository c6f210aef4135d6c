/****************************************************************************
 * Copyright 2026 the legdyn authors.
 * This library is distributed under the terms of the Apache V2.0
 * License (obtainable from http://www.apache.org/licenses/LICENSE-2.0).
 ****************************************************************************/
#include "legdyn/kinematics.hpp"

#include <stdexcept>

namespace legdyn {

void LegSweep::build(const LegGeometry& geom, const double* theta_leg, int link_count) {
  count_ = link_count;
  product_.resize(link_count + 1);
  ad_fwd_.resize(link_count + 1);
  ad_inv_.resize(link_count + 1);
  xi_prime_.resize(link_count);

  product_[0] = Pose::identity();
  ad_fwd_[0] = Matrix6d::Identity();
  ad_inv_[0] = Matrix6d::Identity();
  for (int k = 0; k < link_count; ++k) {
    product_[k + 1] = product_[k] * exp_se3(geom.screws[k], theta_leg[k]);
    ad_fwd_[k + 1] = adjoint_of(product_[k + 1]);
    ad_inv_[k + 1] = adjoint_inverse_of(product_[k + 1]);
    xi_prime_[k] = ad_fwd_[k] * geom.screws[k];
  }
}

Matrix6d LegSweep::accumulated_adjoint(int k, int j) const {
  if (k == 0) return Matrix6d::Identity();
  if (k > j) return Matrix6d::Zero();
  // Ad⁻¹ of e^{ξ_k θ_k}…e^{ξ_j θ_j} = Ad⁻¹(P_j) · Ad(P_{k-1}).
  return ad_inv_[j] * ad_fwd_[k - 1];
}

LegJacobian LegSweep::body_jacobian(const LegGeometry& geom, int link) const {
  LegJacobian jac = LegJacobian::Zero(6, geom.dof);
  for (int k = 0; k <= link; ++k) jac.col(k) = xi_prime_[k];
  return jac;
}

LegJacobian LegSweep::tip_jacobian(const LegGeometry& geom) const {
  LegJacobian jac = LegJacobian::Zero(6, geom.dof);
  for (int k = 0; k < count_; ++k) jac.col(k) = xi_prime_[k];
  return jac;
}

namespace {

LegSweep sweep_for(const RobotModel& model, int leg, const Eigen::VectorXd& theta_leg,
                   int links) {
  const LegGeometry& geom = model.leg(leg);
  if (links > geom.dof || static_cast<int>(theta_leg.size()) < links)
    throw std::out_of_range("link index exceeds the leg's DoF");
  LegSweep sweep;
  sweep.build(geom, theta_leg.data(), links);
  return sweep;
}

}  // namespace

Pose link_pose(const RobotModel& model, int leg, int link, const Eigen::VectorXd& theta_leg) {
  const LegSweep sweep = sweep_for(model, leg, theta_leg, link + 1);
  return sweep.link_pose(model.leg(leg), link);
}

Matrix6d accumulated_adjoint(const RobotModel& model, int leg, int k, int j,
                             const Eigen::VectorXd& theta_leg) {
  if (k < 0 || j < 0 || k > model.leg_dof(leg) || j > model.leg_dof(leg))
    throw std::out_of_range("accumulated adjoint indices exceed the leg's DoF");
  const LegSweep sweep = sweep_for(model, leg, theta_leg, std::max(j, 0));
  return sweep.accumulated_adjoint(k, j);
}

LegJacobian leg_body_jacobian(const RobotModel& model, int leg, int link,
                              const Eigen::VectorXd& theta_leg) {
  const LegSweep sweep = sweep_for(model, leg, theta_leg, link + 1);
  return sweep.body_jacobian(model.leg(leg), link);
}

Eigen::MatrixXd contact_jacobian(const RobotModel& model, const ReducedIndex& idx,
                                 const Eigen::VectorXd& theta) {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(6 * idx.tip_count(), idx.dof());
  LegSweep sweep;
  for (int i = 0; i < model.leg_count(); ++i) {
    if (!idx.tip_present(i)) continue;
    const LegGeometry& geom = model.leg(i);
    sweep.build(geom, theta.data() + model.joint_offset(i), geom.dof);
    const Matrix6d ad_tip_inv = adjoint_inverse_of(sweep.tip_pose(geom));
    const int row = 6 * idx.tip_block(i);
    jac.block<6, 6>(row, 0) = ad_tip_inv;
    jac.block(row, 6 + idx.leg_joint_base(i), 6, geom.dof) =
        ad_tip_inv * sweep.tip_jacobian(geom);
  }
  return jac;
}

Eigen::MatrixXd contact_jacobian(const RobotModel& model, const MorphologyVectors& mv,
                                 const Eigen::VectorXd& theta) {
  return contact_jacobian(model, ReducedIndex(model, mv), theta);
}

}  // namespace legdyn

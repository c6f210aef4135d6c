/****************************************************************************
 * Copyright 2026 the legdyn authors.
 * This library is distributed under the terms of the Apache V2.0
 * License (obtainable from http://www.apache.org/licenses/LICENSE-2.0).
 ****************************************************************************/
#pragma once

#include <Eigen/Core>

#include "legdyn/model.hpp"
#include "legdyn/reduction.hpp"

namespace legdyn {

/// 6 x n leg Jacobian with a compile-time column cap so it lives on the stack.
using LegJacobian = Eigen::Matrix<double, 6, Eigen::Dynamic, Eigen::ColMajor, 6, 8>;

/// One forward pass over a leg's joints at a given configuration. Caches the
/// partial exponential products, their adjoints, and the instantaneous joint
/// screws; everything downstream (Jacobians, accumulated adjoints, mass
/// partials) is read off this cache in O(1) products each.
class LegSweep {
public:
  LegSweep() = default;

  /// theta_leg points at the leg's own joint angles; only the first
  /// `link_count` joints are swept.
  void build(const LegGeometry& geom, const double* theta_leg, int link_count);

  int link_count() const { return count_; }

  /// Product of the first m joint exponentials (m = 0 gives the identity).
  const Pose& partial_product(int m) const { return product_[m]; }
  const Matrix6d& ad_product(int m) const { return ad_fwd_[m]; }
  const Matrix6d& ad_product_inverse(int m) const { return ad_inv_[m]; }

  /// Instantaneous screw of joint k (1-based) in the body frame; the first
  /// one equals the constant joint screw.
  const Twist& instantaneous_screw(int k) const { return xi_prime_[k - 1]; }

  /// Inverse adjoint of the joint-k..joint-j exponential product (1-based,
  /// inclusive). Branches: identity for k = 0, zero for k > j.
  Matrix6d accumulated_adjoint(int k, int j) const;

  Pose link_pose(const LegGeometry& geom, int link) const {
    return product_[link + 1] * geom.link_home[link];
  }
  Pose tip_pose(const LegGeometry& geom) const {
    return product_[count_] * (*geom.tip_home);
  }

  /// Columns [ξ₁, ξ'₂, …, ξ'_{j+1}, 0 …] for link `link` (0-based), padded
  /// with zeros to the leg DoF.
  LegJacobian body_jacobian(const LegGeometry& geom, int link) const;
  /// Full-column Jacobian of a frame carried past the last swept joint.
  LegJacobian tip_jacobian(const LegGeometry& geom) const;

private:
  int count_ = 0;
  std::vector<Pose> product_;
  std::vector<Matrix6d> ad_fwd_;
  std::vector<Matrix6d> ad_inv_;
  std::vector<Twist> xi_prime_;
};

/// POE pose of link `link` (0-based) of leg `leg`; depends only on the leg's
/// first link+1 joint angles.
Pose link_pose(const RobotModel& model, int leg, int link, const Eigen::VectorXd& theta_leg);

/// Paper-convention accumulated adjoint for leg `leg` (indices 1-based, see
/// LegSweep::accumulated_adjoint).
Matrix6d accumulated_adjoint(const RobotModel& model, int leg, int k, int j,
                             const Eigen::VectorXd& theta_leg);

LegJacobian leg_body_jacobian(const RobotModel& model, int leg, int link,
                              const Eigen::VectorXd& theta_leg);

/// Stacked tip Jacobian at reduced dimensions: one 6-row block per present
/// tip, mapping [body twist; present joint rates] to tip-frame twists.
/// Columns belonging to other legs' joints are zero.
Eigen::MatrixXd contact_jacobian(const RobotModel& model, const MorphologyVectors& mv,
                                 const Eigen::VectorXd& theta);
Eigen::MatrixXd contact_jacobian(const RobotModel& model, const ReducedIndex& idx,
                                 const Eigen::VectorXd& theta);

}  // namespace legdyn

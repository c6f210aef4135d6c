/****************************************************************************
 * Copyright 2026 the legdyn authors.
 * This library is distributed under the terms of the Apache V2.0
 * License (obtainable from http://www.apache.org/licenses/LICENSE-2.0).
 ****************************************************************************/
#pragma once

#include <vector>

#include <Eigen/Core>

#include "legdyn/kinematics.hpp"
#include "legdyn/model.hpp"
#include "legdyn/reduction.hpp"

namespace legdyn {

using MatNN = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 8, 8>;

/// Everything the equations of motion need at one configuration, at reduced
/// dimensions. mass is symmetric positive definite; coriolis vanishes exactly
/// at zero quasi-velocity.
struct StructuralMatrices {
  Eigen::MatrixXd mass;
  Eigen::MatrixXd coriolis;
  Eigen::VectorXd potential;
  Eigen::MatrixXd contact_jacobian;
};

/// Quasi-momentum M·v partitioned 3/3/n; only consumed by the Coriolis
/// assembly.
struct Momentum {
  Vector3d linear;
  Vector3d angular;
  Eigen::VectorXd joint;
};

/// Blocks of one link's contribution to the mass matrix, at the leg's full
/// column width (trailing columns past the link are zero).
struct LinkMassBlocks {
  Matrix6d bb;
  LegJacobian btheta;
  MatNN thetatheta;
};

/// Link mass blocks M^{bb}, ℳ^{bθ}, ℳ^{θθ} for link `link` (0-based) of leg
/// `leg` at the given leg configuration.
LinkMassBlocks link_mass(const RobotModel& model, int leg, int link,
                         const Eigen::VectorXd& theta_leg);

/// Closed-form partial derivative of the same blocks with respect to the
/// leg's joint `k` (0-based). Zero for k > link.
LinkMassBlocks mass_partials(const RobotModel& model, int leg, int link,
                             const Eigen::VectorXd& theta_leg, int k);

/// Existence-weighted mass matrix at reduced dimensions.
Eigen::MatrixXd assemble_mass(const RobotModel& model, const MorphologyVectors& mv,
                              const Eigen::VectorXd& theta);

/// Closed-form Coriolis matrix at reduced dimensions; v must already be
/// reduced ([body twist; present joint rates]).
Eigen::MatrixXd coriolis(const RobotModel& model, const MorphologyVectors& mv,
                         const Eigen::VectorXd& theta, const Eigen::VectorXd& v_reduced);

/// Gradient of the gravity potential in quasi-coordinates, reduced.
Eigen::VectorXd potential_forces(const RobotModel& model, const MorphologyVectors& mv,
                                 const Pose& body_pose, const Eigen::VectorXd& theta);

/// Solves M v̇ = τ + 𝒥ᵀF − Cv − 𝒩 by Cholesky with one step of iterative
/// refinement. F_tips stacks a 6-vector wrench per present tip.
Eigen::VectorXd forward_dynamics(const RobotModel& model, const MorphologyVectors& mv,
                                 const Pose& body_pose, const Eigen::VectorXd& theta,
                                 const Eigen::VectorXd& v_reduced,
                                 const Eigen::VectorXd& tau_reduced,
                                 const Eigen::VectorXd& tip_wrenches);

/// Solves M x = rhs by Cholesky with one iterative-refinement pass.
/// Throws SingularMassError when the factorization fails.
Eigen::VectorXd solve_mass(const Eigen::MatrixXd& mass, const Eigen::VectorXd& rhs);

/// Full-dimension assembly with existence weights followed by removal of the
/// zero rows/columns (and of absent-tip Jacobian rows). Matches the directly
/// reduced assembly entry for entry.
StructuralMatrices reconfigure(const RobotModel& model, const MorphologyVectors& mv,
                               const RobotState& state);

/// Total mechanical energy ½vᵀMv + U at the state's morphology.
double total_energy(const RobotModel& model, const MorphologyVectors& mv,
                    const RobotState& state);

/// Gravity potential U alone (spatial frame, zero at the ground plane).
double gravity_potential(const RobotModel& model, const MorphologyVectors& mv,
                         const Pose& body_pose, const Eigen::VectorXd& theta);

/// Reference evaluator: closed-form blocks per link, assembled with existence
/// weights at reduced dimensions. Owns its scratch; one instance per
/// simulation context.
class NaiveEvaluator {
public:
  NaiveEvaluator(const RobotModel& model, const MorphologyVectors& mv);

  void set_morphology(const MorphologyVectors& mv);
  const MorphologyVectors& morphology() const { return mv_; }
  const ReducedIndex& reduced() const { return idx_; }

  const StructuralMatrices& evaluate(const RobotState& state);
  const StructuralMatrices& current() const { return out_; }

private:
  const RobotModel* model_;
  MorphologyVectors mv_;
  ReducedIndex idx_;
  std::vector<LegSweep> sweeps_;
  StructuralMatrices out_;
};

namespace detail {
/// Momentum partition of M·v (reduced); exposed for tests.
Momentum split_momentum(const Eigen::VectorXd& generalized, int joint_count);
}  // namespace detail

}  // namespace legdyn

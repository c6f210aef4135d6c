/****************************************************************************
 * Copyright 2026 the legdyn authors.
 * This library is distributed under the terms of the Apache V2.0
 * License (obtainable from http://www.apache.org/licenses/LICENSE-2.0).
 ****************************************************************************/
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "legdyn/liegroup.hpp"

namespace legdyn {

/// One catalog leg type: constant joint screws and home poses expressed in
/// the leg's own frame at zero configuration, plus per-link generalized mass
/// in the link CoM frame.
struct LegMorphology {
  std::vector<Twist> joint_screws;
  std::vector<Pose> link_home;          ///< CoM frame of each link at zero config
  std::optional<Pose> tip_home;         ///< absent for stump morphologies
  std::vector<Matrix6d> link_inertia;   ///< 6x6 SPD, blockdiag(m I3, J), CoM frame

  int dof() const { return static_cast<int>(joint_screws.size()); }

  /// Checks list lengths, symmetry/positive-definiteness of the inertias and
  /// that each inertia is expressed in a CoM frame.
  void validate() const;
};

struct LegAttachment {
  int catalog_index = 0;
  Pose hip;  ///< pre-composed with the catalog home poses; Ad applied to screws
};

/// Catalog morphology with one attachment folded in, expressed in the main
/// body frame. This is what kinematics and dynamics consume.
struct LegGeometry {
  int dof = 0;
  std::vector<Twist> screws;
  std::vector<Pose> link_home;
  std::optional<Pose> tip_home;
  std::vector<Matrix6d> inertia_com;   ///< unchanged local-frame inertias
  std::vector<Matrix6d> inertia_body;  ///< Ad^{-T}_{g0} I Ad^{-1}_{g0}
  std::vector<double> mass;
};

class RobotModel {
public:
  RobotModel(const Matrix6d& body_inertia, std::vector<LegMorphology> catalog,
             std::vector<LegAttachment> legs, const Vector3d& gravity);

  int leg_count() const { return static_cast<int>(legs_.size()); }
  int total_dof() const { return total_dof_; }
  int joint_offset(int leg) const { return joint_offset_[leg]; }
  int leg_dof(int leg) const { return geometry_[leg].dof; }

  const LegGeometry& leg(int i) const { return geometry_[i]; }
  const LegMorphology& catalog_entry(int a) const { return catalog_[a]; }
  int catalog_size() const { return static_cast<int>(catalog_.size()); }
  const LegAttachment& attachment(int i) const { return legs_[i]; }

  const Matrix6d& body_inertia() const { return body_inertia_; }
  double body_mass() const { return body_inertia_(0, 0); }
  const Vector3d& gravity() const { return gravity_; }

private:
  Matrix6d body_inertia_;
  std::vector<LegMorphology> catalog_;
  std::vector<LegAttachment> legs_;
  std::vector<LegGeometry> geometry_;
  std::vector<int> joint_offset_;
  int total_dof_ = 0;
  Vector3d gravity_;
};

/// Binary existence masks. `link` has one entry per joint/link in leg-major
/// order; `leg` one entry per leg.
struct MorphologyVectors {
  std::vector<std::uint8_t> link;
  std::vector<std::uint8_t> leg;

  static MorphologyVectors healthy(const RobotModel& model);

  bool operator==(const MorphologyVectors&) const = default;
};

/// Whole-robot configuration and quasi-velocity. `theta` always has the full
/// healthy length; entries of absent joints stay frozen at their last value.
/// `v` is [body twist; joint rates] with absent rates zero.
struct RobotState {
  Pose body_pose;
  Eigen::VectorXd theta;
  Eigen::VectorXd v;

  static RobotState zero(const RobotModel& model);
};

struct DamageEvent {
  double time = 0.0;  ///< scenario time; ignored by apply_damage itself

  std::vector<int> remove_legs;  ///< 0-based leg indices
  struct LinkRemoval {
    int leg = 0;                 ///< 0-based
    int first_removed_link = 0;  ///< 0-based; this link and all distal ones go
  };
  std::vector<LinkRemoval> remove_links;

  struct JointLock {
    int leg = 0;
    int joint = 0;
  };
  std::vector<JointLock> lock_joints;  ///< handled by the controller, not the masks

  bool empty() const {
    return remove_legs.empty() && remove_links.empty() && lock_joints.empty();
  }
};

/// Throws InvalidMorphologyError unless each leg's link mask is a contiguous
/// prefix of ones and the leg flags agree with the link masks.
void validate_morphology(const RobotModel& model, const MorphologyVectors& mv);

/// Applies removals and returns masks that pass validate_morphology.
/// Idempotent: re-applying the same event is a no-op.
MorphologyVectors apply_damage(const RobotModel& model, const MorphologyVectors& mv,
                               const DamageEvent& event);

/// Six 3-DoF yaw-pitch-pitch legs with the stock trunk/leg parameters.
RobotModel build_hexapod_default();

}  // namespace legdyn

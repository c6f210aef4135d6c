/****************************************************************************
 * Copyright 2026 the legdyn authors.
 * This library is distributed under the terms of the Apache V2.0
 * License (obtainable from http://www.apache.org/licenses/LICENSE-2.0).
 ****************************************************************************/
#pragma once

#include <vector>

#include <Eigen/Core>

#include "legdyn/model.hpp"

namespace legdyn {

/// Index bookkeeping for one morphology: which joints survive, where they
/// land in the reduced vectors, and which legs still have a tip.
class ReducedIndex {
public:
  ReducedIndex(const RobotModel& model, const MorphologyVectors& mv);

  int dof() const { return 6 + joint_count_; }
  int joint_count() const { return joint_count_; }

  bool leg_present(int leg) const { return leg_present_[leg] != 0; }
  /// Number of leading links of the leg that remain (prefix length).
  int present_links(int leg) const { return prefix_[leg]; }
  /// Reduced column (within the joint part) of the leg's first joint, or -1.
  int leg_joint_base(int leg) const { return base_[leg]; }

  bool tip_present(int leg) const { return tip_present_[leg] != 0; }
  int tip_count() const { return tip_count_; }
  /// Row-block index of the leg's tip in the stacked contact Jacobian, or -1.
  int tip_block(int leg) const { return tip_block_[leg]; }

  /// Global joint indices of the present joints, in reduced order.
  const std::vector<int>& present_joints() const { return present_joints_; }

  Eigen::VectorXd gather_joints(const Eigen::VectorXd& full) const;
  Eigen::VectorXd gather_velocity(const Eigen::VectorXd& v_full) const;
  void scatter_velocity(const Eigen::VectorXd& v_reduced, Eigen::VectorXd& v_full) const;

private:
  int joint_count_ = 0;
  int tip_count_ = 0;
  std::vector<std::uint8_t> leg_present_;
  std::vector<std::uint8_t> tip_present_;
  std::vector<int> prefix_;
  std::vector<int> base_;
  std::vector<int> tip_block_;
  std::vector<int> present_joints_;
};

}  // namespace legdyn

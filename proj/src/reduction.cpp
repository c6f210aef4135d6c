/****************************************************************************
 * Copyright 2026 the legdyn authors.
 * This library is distributed under the terms of the Apache V2.0
 * License (obtainable from http://www.apache.org/licenses/LICENSE-2.0).
 ****************************************************************************/
#include "legdyn/reduction.hpp"

namespace legdyn {

ReducedIndex::ReducedIndex(const RobotModel& model, const MorphologyVectors& mv) {
  validate_morphology(model, mv);
  const int nlegs = model.leg_count();
  leg_present_.resize(nlegs);
  tip_present_.resize(nlegs);
  prefix_.resize(nlegs);
  base_.resize(nlegs);
  tip_block_.resize(nlegs);

  for (int i = 0; i < nlegs; ++i) {
    const int off = model.joint_offset(i);
    const int n = model.leg_dof(i);
    int p = 0;
    while (p < n && mv.link[off + p]) ++p;
    prefix_[i] = p;
    leg_present_[i] = mv.leg[i];
    base_[i] = p > 0 ? joint_count_ : -1;
    for (int j = 0; j < p; ++j) present_joints_.push_back(off + j);
    joint_count_ += p;

    const bool has_tip = p == n && model.leg(i).tip_home.has_value();
    tip_present_[i] = has_tip ? 1 : 0;
    tip_block_[i] = has_tip ? tip_count_++ : -1;
  }
}

Eigen::VectorXd ReducedIndex::gather_joints(const Eigen::VectorXd& full) const {
  Eigen::VectorXd out(joint_count_);
  for (std::size_t k = 0; k < present_joints_.size(); ++k) out[k] = full[present_joints_[k]];
  return out;
}

Eigen::VectorXd ReducedIndex::gather_velocity(const Eigen::VectorXd& v_full) const {
  Eigen::VectorXd out(dof());
  out.head<6>() = v_full.head<6>();
  for (std::size_t k = 0; k < present_joints_.size(); ++k)
    out[6 + k] = v_full[6 + present_joints_[k]];
  return out;
}

void ReducedIndex::scatter_velocity(const Eigen::VectorXd& v_reduced,
                                    Eigen::VectorXd& v_full) const {
  v_full.head<6>() = v_reduced.head<6>();
  for (std::size_t k = 0; k < present_joints_.size(); ++k)
    v_full[6 + present_joints_[k]] = v_reduced[6 + k];
}

}  // namespace legdyn

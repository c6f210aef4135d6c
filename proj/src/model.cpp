/****************************************************************************
 * Copyright 2026 the legdyn authors.
 * This library is distributed under the terms of the Apache V2.0
 * License (obtainable from http://www.apache.org/licenses/LICENSE-2.0).
 ****************************************************************************/
#include "legdyn/model.hpp"

#include <Eigen/Cholesky>

#include <string>

namespace legdyn {

namespace {

void check_spd(const Matrix6d& inertia, const std::string& what) {
  if ((inertia - inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw StructuralError(what + ": generalized mass is not symmetric");
  Eigen::LLT<Matrix6d> llt(inertia);
  if (llt.info() != Eigen::Success)
    throw StructuralError(what + ": generalized mass is not positive definite");
}

void check_com_frame(const Matrix6d& inertia, const std::string& what) {
  const double m = inertia(0, 0);
  if ((inertia.topLeftCorner<3, 3>() - m * Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
      inertia.topRightCorner<3, 3>().cwiseAbs().maxCoeff() > 1e-9)
    throw StructuralError(what + ": inertia is not expressed in a CoM frame");
}

}  // namespace

void LegMorphology::validate() const {
  const auto n = joint_screws.size();
  if (n == 0) throw StructuralError("leg morphology has no joints");
  if (link_home.size() != n || link_inertia.size() != n)
    throw StructuralError("leg morphology list lengths do not match the DoF count");
  for (std::size_t j = 0; j < n; ++j) {
    if (!joint_screws[j].allFinite())
      throw StructuralError("joint screw has non-finite entries");
    const std::string what = "link " + std::to_string(j + 1);
    check_spd(link_inertia[j], what);
    check_com_frame(link_inertia[j], what);
  }
}

RobotModel::RobotModel(const Matrix6d& body_inertia, std::vector<LegMorphology> catalog,
                       std::vector<LegAttachment> legs, const Vector3d& gravity)
    : body_inertia_(body_inertia),
      catalog_(std::move(catalog)),
      legs_(std::move(legs)),
      gravity_(gravity) {
  check_spd(body_inertia_, "main body");
  for (const auto& entry : catalog_) entry.validate();

  geometry_.reserve(legs_.size());
  joint_offset_.reserve(legs_.size());
  for (const auto& att : legs_) {
    if (att.catalog_index < 0 || att.catalog_index >= static_cast<int>(catalog_.size()))
      throw StructuralError("leg attachment references a missing catalog entry");
    const LegMorphology& morph = catalog_[att.catalog_index];
    const Matrix6d ad_hip = adjoint_of(att.hip);

    LegGeometry geom;
    geom.dof = morph.dof();
    if (geom.dof > 8) throw StructuralError("legs with more than 8 joints are not supported");
    for (int j = 0; j < geom.dof; ++j) {
      geom.screws.push_back(ad_hip * morph.joint_screws[j]);
      geom.link_home.push_back(att.hip * morph.link_home[j]);
      geom.inertia_com.push_back(morph.link_inertia[j]);
      const Matrix6d ad_home_inv = adjoint_inverse_of(geom.link_home.back());
      geom.inertia_body.push_back(ad_home_inv.transpose() * morph.link_inertia[j] * ad_home_inv);
      geom.mass.push_back(morph.link_inertia[j](0, 0));
    }
    if (morph.tip_home) geom.tip_home = att.hip * (*morph.tip_home);

    joint_offset_.push_back(total_dof_);
    total_dof_ += geom.dof;
    geometry_.push_back(std::move(geom));
  }
}

MorphologyVectors MorphologyVectors::healthy(const RobotModel& model) {
  MorphologyVectors mv;
  mv.link.assign(model.total_dof(), 1);
  mv.leg.assign(model.leg_count(), 1);
  return mv;
}

RobotState RobotState::zero(const RobotModel& model) {
  RobotState s;
  s.theta = Eigen::VectorXd::Zero(model.total_dof());
  s.v = Eigen::VectorXd::Zero(6 + model.total_dof());
  return s;
}

void validate_morphology(const RobotModel& model, const MorphologyVectors& mv) {
  if (static_cast<int>(mv.link.size()) != model.total_dof() ||
      static_cast<int>(mv.leg.size()) != model.leg_count())
    throw InvalidMorphologyError(InvalidMorphologyError::Kind::BadDimension, 0,
                                 "morphology vector lengths do not match the model");
  for (int i = 0; i < model.leg_count(); ++i) {
    const int base = model.joint_offset(i);
    const int n = model.leg_dof(i);
    bool seen_absent = false;
    int present = 0;
    for (int j = 0; j < n; ++j) {
      if (mv.link[base + j]) {
        if (seen_absent)
          throw InvalidMorphologyError(
              InvalidMorphologyError::Kind::NonPrefixPattern, i + 1,
              "leg " + std::to_string(i + 1) + ": present link follows an absent one");
        ++present;
      } else {
        seen_absent = true;
      }
    }
    if ((mv.leg[i] != 0) != (present > 0))
      throw InvalidMorphologyError(
          InvalidMorphologyError::Kind::InconsistentLegFlag, i + 1,
          "leg " + std::to_string(i + 1) + ": leg flag disagrees with its link mask");
  }
}

MorphologyVectors apply_damage(const RobotModel& model, const MorphologyVectors& mv,
                               const DamageEvent& event) {
  MorphologyVectors out = mv;
  for (int leg : event.remove_legs) {
    const int base = model.joint_offset(leg);
    for (int j = 0; j < model.leg_dof(leg); ++j) out.link[base + j] = 0;
  }
  for (const auto& rem : event.remove_links) {
    const int base = model.joint_offset(rem.leg);
    for (int j = rem.first_removed_link; j < model.leg_dof(rem.leg); ++j)
      out.link[base + j] = 0;
  }
  for (int i = 0; i < model.leg_count(); ++i) {
    const int base = model.joint_offset(i);
    int present = 0;
    for (int j = 0; j < model.leg_dof(i); ++j) present += out.link[base + j];
    out.leg[i] = present > 0 ? 1 : 0;
  }
  validate_morphology(model, out);
  return out;
}

RobotModel build_hexapod_default() {
  const double l1 = 0.045, l2 = 0.077, l3 = 0.123;

  LegMorphology leg;
  // Yaw at the hip, then two pitch joints about the leg's lateral axis.
  Twist yaw = Twist::Zero();
  yaw.tail<3>() = Vector3d::UnitZ();
  leg.joint_screws.push_back(yaw);
  for (double x : {l1, l1 + l2}) {
    Twist pitch = Twist::Zero();
    pitch.tail<3>() = Vector3d::UnitY();
    pitch.head<3>() = -Vector3d::UnitY().cross(Vector3d(x, 0, 0));
    leg.joint_screws.push_back(pitch);
  }
  leg.link_home = {Pose(Matrix3d::Identity(), Vector3d(l1 / 2, 0, 0)),
                   Pose(Matrix3d::Identity(), Vector3d(l1 + l2 / 2, 0, 0)),
                   Pose(Matrix3d::Identity(), Vector3d(l1 + l2 + l3 / 2, 0, 0))};
  leg.tip_home = Pose(Matrix3d::Identity(), Vector3d(l1 + l2 + l3, 0, 0));

  const double masses[3] = {0.02, 0.07, 0.11};
  const Vector3d moments[3] = {1e-4 * Vector3d(1.0, 8.28, 9.09),
                               1e-4 * Vector3d(0.23, 3.07, 2.91),
                               1e-4 * Vector3d(0.22, 10.0, 10.01)};
  for (int j = 0; j < 3; ++j) {
    Matrix6d inertia = Matrix6d::Zero();
    inertia.topLeftCorner<3, 3>() = masses[j] * Matrix3d::Identity();
    inertia.bottomRightCorner<3, 3>() = moments[j].asDiagonal();
    leg.link_inertia.push_back(inertia);
  }

  Matrix6d body = Matrix6d::Zero();
  body.topLeftCorner<3, 3>() = 1.35 * Matrix3d::Identity();
  body.bottomRightCorner<3, 3>() = (1e-4 * Vector3d(46.0, 9.36, 52.0)).asDiagonal();

  // Hip frames share one orientation: leg x-axis along body +y (direction of
  // travel), so straight-line tip targets stay in each leg's sagittal plane.
  Matrix3d hip_rot;
  hip_rot << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const Vector3d hips[6] = {{0.051, 0.093, 0.0},  {-0.051, 0.093, 0.0},
                            {0.073, 0.0, 0.0},    {-0.073, 0.0, 0.0},
                            {0.051, -0.093, 0.0}, {-0.051, -0.093, 0.0}};
  std::vector<LegAttachment> legs;
  for (const Vector3d& hip : hips) legs.push_back({0, Pose(hip_rot, hip)});

  return RobotModel(body, {leg}, std::move(legs), Vector3d(0, 0, -9.81));
}

}  // namespace legdyn

/****************************************************************************
 * Copyright 2026 the legdyn authors.
 * This library is distributed under the terms of the Apache V2.0
 * License (obtainable from http://www.apache.org/licenses/LICENSE-2.0).
 ****************************************************************************/
#include "legdyn/locomotion.hpp"

#include <cmath>

namespace legdyn {

Wrench contact_wrench(const Pose& tip_pose, const Vector3d& tip_velocity,
                      const ContactParams& params) {
  Wrench wrench = Wrench::Zero();
  const double z = tip_pose.position.z();
  if (z >= 0.0) return wrench;

  Vector3d force;  // spatial components
  force.z() = std::max(0.0, -params.stiffness * z - params.normal_damping * tip_velocity.z());
  force.x() = -params.tangential_damping * tip_velocity.x();
  force.y() = -params.tangential_damping * tip_velocity.y();
  wrench.head<3>() = tip_pose.rotation.transpose() * force;
  return wrench;
}

Vector3d gait_reference(const Vector3d& hip_position, int phase_group, int k,
                        const GaitParams& params) {
  const int n = params.points();
  int keff = (k + (phase_group ? n / 2 : 0)) % n;
  if (keff < 0) keff += n;
  const double phase = static_cast<double>(keff) / static_cast<double>(n);

  Vector3d p;
  p.x() = hip_position.x();
  p.y() = hip_position.y() - 0.5 * params.step_length * std::cos(2.0 * M_PI * phase);
  const bool swing = keff < n / 2;
  const double amp = swing ? params.step_height : params.step_depth;
  p.z() = hip_position.z() + 0.5 * amp * (1.0 - std::cos(4.0 * M_PI * phase)) -
          params.body_height;
  return p;
}

LegIkGeometry hexapod_ik_geometry(const RobotModel& model, int leg) {
  const LegAttachment& att = model.attachment(leg);
  const LegMorphology& morph = model.catalog_entry(att.catalog_index);
  if (morph.dof() != 3 || !morph.tip_home)
    throw StructuralError("leg is not a 3-DoF chain with a tip");

  const Vector3d z = Vector3d::UnitZ(), y = Vector3d::UnitY();
  if ((morph.joint_screws[0].tail<3>() - z).norm() > 1e-9 ||
      morph.joint_screws[0].head<3>().norm() > 1e-9 ||
      (morph.joint_screws[1].tail<3>() - y).norm() > 1e-9 ||
      (morph.joint_screws[2].tail<3>() - y).norm() > 1e-9)
    throw StructuralError("leg is not a yaw-pitch-pitch chain");

  LegIkGeometry geom;
  geom.hip = att.hip;
  geom.l1 = morph.joint_screws[1].head<3>().z();
  geom.l2 = morph.joint_screws[2].head<3>().z() - geom.l1;
  geom.l3 = morph.tip_home->position.x() - geom.l1 - geom.l2;
  if (geom.l1 <= 0 || geom.l2 <= 0 || geom.l3 <= 0)
    throw StructuralError("leg link lengths could not be recovered");
  return geom;
}

namespace {

// Planar target of the 2R sub-chain: signed radial offset from joint 2 and
// height, given a hip-frame target.
struct Planar {
  double yaw;
  double a, b;
};

Planar to_planar(const LegIkGeometry& geom, const Vector3d& target_body) {
  const Vector3d t = geom.hip.inverse().act(target_body);
  Planar p;
  if (t.x() == 0.0 && t.y() == 0.0) {
    p.yaw = 0.0;  // on the yaw axis: any yaw works, keep the principal one
  } else {
    p.yaw = std::atan2(t.y(), t.x());
    if (p.yaw > M_PI / 2) p.yaw -= M_PI;
    if (p.yaw <= -M_PI / 2) p.yaw += M_PI;
  }
  const double u = std::cos(p.yaw) * t.x() + std::sin(p.yaw) * t.y();
  p.a = u - geom.l1;
  p.b = t.z();
  return p;
}

}  // namespace

Vector3d leg_ik(const LegIkGeometry& geom, const Vector3d& target_body) {
  const Planar p = to_planar(geom, target_body);
  const double r2 = p.a * p.a + p.b * p.b;
  const double d = (r2 - geom.l2 * geom.l2 - geom.l3 * geom.l3) / (2.0 * geom.l2 * geom.l3);
  if (d > 1.0 || d < -1.0) {
    const double r = std::sqrt(r2);
    const double deficit =
        d > 1.0 ? r - (geom.l2 + geom.l3) : std::abs(geom.l2 - geom.l3) - r;
    throw UnreachableTargetError(deficit, "tip target outside the reachable annulus");
  }
  const double knee = std::acos(d);  // tibia-down branch
  const double pitch = -std::atan2(p.b, p.a) -
                       std::atan2(geom.l3 * std::sin(knee), geom.l2 + geom.l3 * std::cos(knee));
  return Vector3d(p.yaw, pitch, knee);
}

Vector3d clamp_to_workspace(const LegIkGeometry& geom, const Vector3d& target_body) {
  Planar p = to_planar(geom, target_body);
  const double r = std::sqrt(p.a * p.a + p.b * p.b);
  const double rmin = std::abs(geom.l2 - geom.l3);
  const double rmax = geom.l2 + geom.l3;
  double rc = std::min(std::max(r, rmin), rmax);
  if (rc == r) return target_body;

  double ca, cb;
  if (r < 1e-12) {
    ca = 0.0;
    cb = -rc;  // degenerate direction: push straight down
  } else {
    ca = p.a * rc / r;
    cb = p.b * rc / r;
  }
  const double u = geom.l1 + ca;
  const Vector3d hip_frame(u * std::cos(p.yaw), u * std::sin(p.yaw), cb);
  return geom.hip.act(hip_frame);
}

Vector3d leg_fk(const LegIkGeometry& geom, const Vector3d& angles) {
  const double c2 = std::cos(angles[1]), s2 = std::sin(angles[1]);
  const double c23 = std::cos(angles[1] + angles[2]), s23 = std::sin(angles[1] + angles[2]);
  const double u = geom.l1 + geom.l2 * c2 + geom.l3 * c23;
  const double z = -geom.l2 * s2 - geom.l3 * s23;
  const Vector3d hip_frame(u * std::cos(angles[0]), u * std::sin(angles[0]), z);
  return geom.hip.act(hip_frame);
}

PidController::PidController(int joint_count, const PidGains& gains)
    : gains_(gains), integral_(Eigen::VectorXd::Zero(joint_count)) {}

void PidController::reset() { integral_.setZero(); }

void PidController::clear_joint(int global_joint) { integral_[global_joint] = 0.0; }

Eigen::VectorXd PidController::compute(const Eigen::VectorXd& theta_des,
                                       const Eigen::VectorXd& theta_dot_des,
                                       const Eigen::VectorXd& theta,
                                       const Eigen::VectorXd& theta_dot,
                                       const std::vector<std::uint8_t>& active, double dt) {
  const int n = static_cast<int>(integral_.size());
  Eigen::VectorXd tau = Eigen::VectorXd::Zero(n);
  const double int_cap =
      gains_.ki > 0.0 ? gains_.integral_limit / gains_.ki : std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j) {
    if (!active[j]) {
      integral_[j] = 0.0;
      continue;
    }
    const double e = theta_des[j] - theta[j];
    integral_[j] = std::clamp(integral_[j] + e * dt, -int_cap, int_cap);
    const double raw = gains_.kp * e + gains_.kd * (theta_dot_des[j] - theta_dot[j]) +
                       gains_.ki * integral_[j];
    tau[j] = std::clamp(raw, -gains_.torque_limit, gains_.torque_limit);
  }
  return tau;
}

}  // namespace legdyn

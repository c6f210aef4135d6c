/****************************************************************************
 * Copyright 2026 the legdyn authors.
 * This library is distributed under the terms of the Apache V2.0
 * License (obtainable from http://www.apache.org/licenses/LICENSE-2.0).
 ****************************************************************************/
#include "legdyn/liegroup.hpp"

#include <Eigen/Geometry>

namespace legdyn {

Pose Pose::validated(const Matrix3d& r, const Vector3d& p, double tol) {
  const double ortho = (r.transpose() * r - Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (ortho > tol)
    throw StructuralError("rotation is not orthonormal (|R'R - I| = " + std::to_string(ortho) + ")");
  if (std::abs(r.determinant() - 1.0) > tol)
    throw StructuralError("rotation has det != +1");
  if (!r.allFinite() || !p.allFinite())
    throw StructuralError("pose has non-finite entries");
  return Pose(r, p);
}

void Pose::orthonormalize() {
  Eigen::Quaterniond q(rotation);
  q.normalize();
  rotation = q.toRotationMatrix();
}

Twist vee(const Matrix4d& m, double tol) {
  const Matrix3d a = m.topLeftCorner<3, 3>();
  if ((a + a.transpose()).cwiseAbs().maxCoeff() > tol)
    throw StructuralError("vee: top-left block is not skew-symmetric");
  if (m.bottomLeftCorner<1, 4>().cwiseAbs().maxCoeff() > tol)
    throw StructuralError("vee: bottom row is not zero");
  Twist xi;
  xi.head<3>() = m.topRightCorner<3, 1>();
  xi.tail<3>() << a(2, 1), a(0, 2), a(1, 0);
  return xi;
}

Matrix3d exp_so3(const Vector3d& w) {
  const double angle = w.norm();
  const Matrix3d wx = skew(w);
  double a, b;  // R = I + a ŵ + b ŵ²
  if (angle < 1e-8) {
    a = 1.0 - angle * angle / 6.0;
    b = 0.5 - angle * angle / 24.0;
  } else {
    a = std::sin(angle) / angle;
    b = (1.0 - std::cos(angle)) / (angle * angle);
  }
  return Matrix3d::Identity() + a * wx + b * (wx * wx);
}

Pose exp_twist(const Twist& xi) {
  const Vector3d u = xi.head<3>();
  const Vector3d w = xi.tail<3>();
  const double angle = w.norm();
  const Matrix3d wx = skew(w);
  Pose g;
  g.rotation = exp_so3(w);
  // Translation through the left Jacobian V = I + b ŵ + c ŵ².
  double b, c;
  if (angle < 1e-8) {
    b = 0.5 - angle * angle / 24.0;
    c = 1.0 / 6.0 - angle * angle / 120.0;
  } else {
    b = (1.0 - std::cos(angle)) / (angle * angle);
    c = (angle - std::sin(angle)) / (angle * angle * angle);
  }
  g.position = u + b * (wx * u) + c * (wx * (wx * u));
  return g;
}

Vector3d zyx_euler(const Matrix3d& r, bool* gimbal) {
  const double sp = -r(2, 0);
  const double cp = std::sqrt(std::max(0.0, 1.0 - sp * sp));
  if (gimbal) *gimbal = cp < 1e-6;
  Vector3d rpy;
  if (cp < 1e-6) {
    // Pitch at ±π/2: yaw and roll are coupled; conventionally put the spin in roll.
    rpy.x() = std::atan2(-r(0, 1), r(1, 1));
    rpy.y() = std::asin(std::clamp(sp, -1.0, 1.0));
    rpy.z() = 0.0;
  } else {
    rpy.x() = std::atan2(r(2, 1), r(2, 2));
    rpy.y() = std::asin(std::clamp(sp, -1.0, 1.0));
    rpy.z() = std::atan2(r(1, 0), r(0, 0));
  }
  return rpy;
}

}  // namespace legdyn

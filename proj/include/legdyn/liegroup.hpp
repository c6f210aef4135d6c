/****************************************************************************
 * Copyright 2026 the legdyn authors.
 * This library is distributed under the terms of the Apache V2.0
 * License (obtainable from http://www.apache.org/licenses/LICENSE-2.0).
 ****************************************************************************/
#pragma once

#include <Eigen/Core>
#include <cmath>

#include "legdyn/errors.hpp"

namespace legdyn {

using Vector3d = Eigen::Vector3d;
using Matrix3d = Eigen::Matrix3d;
using Matrix4d = Eigen::Matrix4d;
using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

/// Body twist or screw axis, ordered [linear; angular].
using Twist = Vector6d;
/// Generalized force collocated with a Twist, ordered [force; torque],
/// so that power = wrench.dot(twist).
using Wrench = Vector6d;

/// Rigid transformation. Rotation is kept orthonormal by construction;
/// `validated` checks invariants on externally supplied data.
struct Pose {
  Matrix3d rotation = Matrix3d::Identity();
  Vector3d position = Vector3d::Zero();

  Pose() = default;
  Pose(const Matrix3d& r, const Vector3d& p) : rotation(r), position(p) {}

  static Pose identity() { return Pose(); }

  /// Throws StructuralError unless RᵀR = I and det R = +1 within `tol`.
  static Pose validated(const Matrix3d& r, const Vector3d& p, double tol = 1e-12);

  /// Analytic inverse (Rᵀ, −Rᵀp); never a generic matrix inversion.
  Pose inverse() const {
    return Pose(rotation.transpose(), -(rotation.transpose() * position));
  }

  Pose operator*(const Pose& other) const {
    return Pose(rotation * other.rotation, rotation * other.position + position);
  }

  Vector3d act(const Vector3d& point) const { return rotation * point + position; }

  Matrix4d homogeneous() const {
    Matrix4d h = Matrix4d::Identity();
    h.topLeftCorner<3, 3>() = rotation;
    h.topRightCorner<3, 1>() = position;
    return h;
  }

  bool is_approx(const Pose& other, double tol = 1e-12) const {
    return rotation.isApprox(other.rotation, tol) &&
           (position - other.position).norm() <= tol * (1.0 + position.norm());
  }

  /// Re-project the rotation onto SO(3); counters round-off drift when poses
  /// are built from long products of exponentials.
  void orthonormalize();
};

inline Matrix3d skew(const Vector3d& w) {
  Matrix3d s;
  s << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
  return s;
}

/// se(3) isomorphism: [v; ω] -> [[ω̂, v], [0, 0]].
inline Matrix4d hat(const Twist& xi) {
  Matrix4d m = Matrix4d::Zero();
  m.topLeftCorner<3, 3>() = skew(xi.tail<3>());
  m.topRightCorner<3, 1>() = xi.head<3>();
  return m;
}

/// Inverse of hat(). Throws StructuralError if the matrix deviates from the
/// se(3) pattern (skew top-left, zero bottom row) by more than `tol`.
Twist vee(const Matrix4d& m, double tol = 1e-9);

/// Rodrigues rotation about the (not necessarily unit) vector w by |w| rad.
Matrix3d exp_so3(const Vector3d& w);

/// Group exponential of the twist xi (unit time).
Pose exp_twist(const Twist& xi);

/// Joint exponential e^{ξ̂θ}. Total on finite inputs; the pure-translation
/// and small-angle cases take series branches.
inline Pose exp_se3(const Twist& xi, double theta) { return exp_twist(xi * theta); }

/// Block form [R, p̂R; 0, R]; transports twists between frames.
inline Matrix6d adjoint_of(const Pose& g) {
  Matrix6d ad = Matrix6d::Zero();
  ad.topLeftCorner<3, 3>() = g.rotation;
  ad.topRightCorner<3, 3>() = skew(g.position) * g.rotation;
  ad.bottomRightCorner<3, 3>() = g.rotation;
  return ad;
}

/// adjoint_of(g.inverse()) without forming the inverse pose twice.
inline Matrix6d adjoint_inverse_of(const Pose& g) { return adjoint_of(g.inverse()); }

/// Lie bracket operator [ω̂, v̂; 0, ω̂] so that ad_of(ξ)η = (ξ̂η̂ − η̂ξ̂)∨.
inline Matrix6d ad_of(const Twist& xi) {
  Matrix6d ad = Matrix6d::Zero();
  const Matrix3d wx = skew(xi.tail<3>());
  ad.topLeftCorner<3, 3>() = wx;
  ad.topRightCorner<3, 3>() = skew(xi.head<3>());
  ad.bottomRightCorner<3, 3>() = wx;
  return ad;
}

/// ZYX Euler angles (roll about x, pitch about y, yaw about z) of a rotation,
/// for output only. `gimbal` is set when |cos(pitch)| < 1e-6.
Vector3d zyx_euler(const Matrix3d& r, bool* gimbal = nullptr);

}  // namespace legdyn

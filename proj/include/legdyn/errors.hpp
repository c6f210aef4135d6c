/****************************************************************************
 * Copyright 2026 the legdyn authors.
 * This library is distributed under the terms of the Apache V2.0
 * License (obtainable from http://www.apache.org/licenses/LICENSE-2.0).
 ****************************************************************************/
#pragma once

#include <stdexcept>
#include <string>

namespace legdyn {

/// A matrix handed to vee() (or a pose loaded from file) does not have the
/// required algebraic structure.
class StructuralError : public std::runtime_error {
public:
  explicit StructuralError(const std::string& what) : std::runtime_error(what) {}
};

/// Morphology vectors that cannot describe a physical robot.
class InvalidMorphologyError : public std::runtime_error {
public:
  enum class Kind { NonPrefixPattern, InconsistentLegFlag, BadDimension };

  InvalidMorphologyError(Kind kind, int leg, const std::string& what)
      : std::runtime_error(what), kind_(kind), leg_(leg) {}

  Kind kind() const { return kind_; }
  /// 1-based leg number, matching the file format and log output.
  int leg() const { return leg_; }

private:
  Kind kind_;
  int leg_;
};

/// Mass matrix factorization failed; the inertia data is not SPD.
class SingularMassError : public std::runtime_error {
public:
  explicit SingularMassError(const std::string& what) : std::runtime_error(what) {}
};

/// Inverse-kinematics target outside the reachable annulus.
class UnreachableTargetError : public std::runtime_error {
public:
  UnreachableTargetError(double deficit, const std::string& what)
      : std::runtime_error(what), deficit_(deficit) {}

  /// How far (m) the target lies outside the workspace boundary.
  double deficit() const { return deficit_; }

private:
  double deficit_;
};

/// A leg morphology fed to the trigonometric decomposition has a joint that
/// is not a unit-pitch-free revolute screw.
class NonRevoluteJointError : public std::runtime_error {
public:
  explicit NonRevoluteJointError(const std::string& what) : std::runtime_error(what) {}
};

/// Simulation state norm exceeded the configured bound.
class NumericalDivergenceError : public std::runtime_error {
public:
  explicit NumericalDivergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed robot description, scenario, or decomposition-cache file.
class SchemaError : public std::runtime_error {
public:
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace legdyn

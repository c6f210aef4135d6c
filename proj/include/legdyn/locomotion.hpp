/****************************************************************************
 * Copyright 2026 the legdyn authors.
 * This library is distributed under the terms of the Apache V2.0
 * License (obtainable from http://www.apache.org/licenses/LICENSE-2.0).
 ****************************************************************************/
#pragma once

#include <limits>
#include <vector>

#include "legdyn/model.hpp"

namespace legdyn {

/// Ground plane z = 0: linear spring-damper normal force, viscous tangential
/// friction.
struct ContactParams {
  double stiffness = 10000.0;           // N/m
  double normal_damping = 150.0;        // N/(m/s)
  double tangential_damping = 50.0;     // N/(m/s)
};

/// Tripod gait reference: per-leg tip positions in the body frame, indexed by
/// an integer step counter that wraps every cycle.
struct GaitParams {
  double step_length = 0.05;   // m
  double step_height = 0.12;   // m
  double step_depth = 0.001;   // m
  double cycle_time = 1.3;     // s
  double body_height = 0.12;   // m, initial trunk height above ground
  double dt = 1e-3;            // s per gait index increment
  /// 0 or 1 per leg; group 1 is shifted half a cycle. Hexapod default puts
  /// legs {1,4,5} in group 0 and {2,3,6} in group 1.
  std::vector<int> phase_group = {0, 1, 1, 0, 0, 1};

  int points() const { return static_cast<int>(std::lround(cycle_time / dt)); }
};

struct PidGains {
  double kp = 50.0;
  double kd = 1.0;
  double ki = 10.0;
  double integral_limit = 2.0;  // N·m cap on the integral contribution
  double torque_limit = std::numeric_limits<double>::infinity();  // N·m per joint
};

/// Wrench exerted by the ground on the tip, expressed in the tip frame
/// (pure force, zero torque). tip_velocity is the spatial velocity of the
/// tip point. Normal force is clamped at zero; no adhesion.
Wrench contact_wrench(const Pose& tip_pose, const Vector3d& tip_velocity,
                      const ContactParams& params);

/// Desired tip position of leg `leg` in the body frame at gait index k.
/// x stays at the hip x; y sweeps ±step_length/2 around the hip y; z lifts by
/// step_height during swing and dips by step_depth during support.
Vector3d gait_reference(const Vector3d& hip_position, int phase_group, int k,
                        const GaitParams& params);

/// Yaw-pitch-pitch chain dimensions used by the closed-form IK.
struct LegIkGeometry {
  double l1 = 0.0, l2 = 0.0, l3 = 0.0;
  Pose hip;
};

/// Extracts the chain dimensions from a model leg; throws StructuralError if
/// the leg is not a yaw-pitch-pitch chain.
LegIkGeometry hexapod_ik_geometry(const RobotModel& model, int leg);

/// Closed-form IK for a body-frame tip target. Yaw is solved in a signed
/// radial form (principal branch, |yaw| ≤ π/2) so straight-line targets that
/// pass under the hip stay continuous; the knee takes the non-negative bend
/// branch. Throws UnreachableTargetError with the boundary deficit.
Vector3d leg_ik(const LegIkGeometry& geom, const Vector3d& target_body);

/// Nearest reachable target (used by callers to clamp before leg_ik).
Vector3d clamp_to_workspace(const LegIkGeometry& geom, const Vector3d& target_body);

/// Forward kinematics of the same chain, for round-trip checks.
Vector3d leg_fk(const LegIkGeometry& geom, const Vector3d& angles);

/// Joint-space PID with integral anti-windup. Owns the integral state for
/// the full joint vector; masked (absent) joints produce zero torque and
/// their integral is cleared.
class PidController {
public:
  PidController(int joint_count, const PidGains& gains);

  void reset();
  void clear_joint(int global_joint);
  const PidGains& gains() const { return gains_; }

  /// All vectors are full length; `active` masks absent joints.
  Eigen::VectorXd compute(const Eigen::VectorXd& theta_des,
                          const Eigen::VectorXd& theta_dot_des,
                          const Eigen::VectorXd& theta, const Eigen::VectorXd& theta_dot,
                          const std::vector<std::uint8_t>& active, double dt);

private:
  PidGains gains_;
  Eigen::VectorXd integral_;
};

}  // namespace legdyn

/****************************************************************************
 * Copyright 2026 the legdyn authors.
 * This library is distributed under the terms of the Apache V2.0
 * License (obtainable from http://www.apache.org/licenses/LICENSE-2.0).
 ****************************************************************************/
#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "legdyn/dynamics.hpp"
#include "legdyn/fastdyn.hpp"
#include "legdyn/locomotion.hpp"
#include "legdyn/model.hpp"

namespace legdyn {

enum class EvalPath { Naive, Fast };
enum class Integrator { SemiImplicitEuler, RungeKutta4 };

struct Scenario {
  std::string name = "scenario";
  std::string robot;  ///< empty or "default-hexapod" for the built-in model
  double duration = 5.0;
  double dt = 1e-3;
  Integrator integrator = Integrator::SemiImplicitEuler;
  EvalPath path = EvalPath::Fast;

  bool gait_enabled = true;
  bool contact_enabled = true;
  bool gravity_enabled = true;

  GaitParams gait;
  ContactParams contact;
  PidGains gains;

  double divergence_bound = 1e3;
  std::vector<DamageEvent> events;  ///< sorted by time on load

  std::optional<Eigen::VectorXd> initial_theta;     // full joint width
  std::optional<Eigen::VectorXd> initial_velocity;  // 6 + full joint width
  std::string output_csv;

  void validate(const RobotModel& model) const;
};

struct TrajectoryRow {
  double t = 0.0;
  Vector3d position = Vector3d::Zero();
  Vector3d rpy = Vector3d::Zero();  // ZYX Euler, output projection only
  bool gimbal = false;
  Eigen::VectorXd theta;            // full width, absent entries frozen
  Eigen::VectorXd v;                // full width, absent rates zero
  std::vector<Vector3d> tip_force;  // spatial, one per leg, zero when absent
  double energy = 0.0;
};

struct TrajectoryLog {
  std::vector<TrajectoryRow> rows;

  /// Versioned CSV with a stable column set: t, body position, ZYX Euler,
  /// all joint angles, per-tip spatial contact forces, energy, gimbal flag.
  void write_csv(std::ostream& out) const;
  void write_csv_file(const std::string& path) const;
};

struct RunSummary {
  Vector3d net_displacement = Vector3d::Zero();
  Vector3d rpy_min = Vector3d::Zero();
  Vector3d rpy_max = Vector3d::Zero();
  int steps = 0;
  double sim_seconds = 0.0;
  double wall_seconds = 0.0;
  double realtime_factor = 0.0;
};

struct RunResult {
  TrajectoryLog log;
  RunSummary summary;
};

/// One sequential simulation context: owns the state, morphology masks,
/// evaluator, controller state, and contact bookkeeping.
class Simulation {
public:
  Simulation(const RobotModel& model, const Scenario& scenario,
             std::vector<LegDecomposition> catalog = {});

  const RobotModel& model() const { return *model_; }
  const RobotState& state() const { return state_; }
  RobotState& mutable_state() { return state_; }
  const MorphologyVectors& morphology() const { return mv_; }
  double time() const { return time_; }
  int step_index() const { return step_index_; }

  /// Tip references -> IK -> PID torques -> contact wrenches -> forward
  /// dynamics at the current state, then one integration step.
  void step();

  /// Applies a morphology change mid-loop: masks update, matrices
  /// re-dimension on the next evaluation, removed joint rates drop to zero;
  /// the body state is untouched.
  void inject_damage(const DamageEvent& event);

  const StructuralMatrices& last_structural() const { return *last_structural_; }
  const std::vector<Vector3d>& last_tip_forces() const { return tip_force_spatial_; }
  const Eigen::VectorXd& last_acceleration() const { return vdot_; }

  double energy() const;
  TrajectoryRow snapshot() const;

  /// Wall-clock seconds spent inside structural-matrix evaluation.
  double structural_seconds() const { return structural_seconds_; }
  const std::vector<double>& structural_step_seconds() const { return structural_samples_; }

private:
  void compute_references(Eigen::VectorXd& theta_des, Eigen::VectorXd& theta_dot_des) const;
  const StructuralMatrices& evaluate_at(const RobotState& state);
  Eigen::VectorXd contact_stack(const RobotState& state, const StructuralMatrices& sm,
                                const Eigen::VectorXd& v_red, bool record);
  Eigen::VectorXd acceleration(const RobotState& state, const Eigen::VectorXd& tau_red);
  void integrate_semi_implicit(const Eigen::VectorXd& tau_red);
  void integrate_rk4(const Eigen::VectorXd& tau_red);
  void check_divergence() const;

  const RobotModel* model_;
  Scenario scenario_;
  MorphologyVectors mv_;
  std::optional<NaiveEvaluator> naive_;
  std::optional<FastEvaluator> fast_;
  const StructuralMatrices* last_structural_ = nullptr;

  RobotState state_;
  double time_ = 0.0;
  int step_index_ = 0;

  PidController pid_;
  std::vector<LegIkGeometry> ik_;
  std::vector<std::uint8_t> active_joints_;
  std::vector<std::uint8_t> locked_;
  Eigen::VectorXd lock_angle_;
  std::vector<Vector3d> tip_force_spatial_;
  Eigen::VectorXd vdot_;

  double structural_seconds_ = 0.0;
  std::vector<double> structural_samples_;
};

/// Deterministic scenario run: initial tripod stance (unless overridden),
/// damage events applied at their times, one log row per step plus the
/// initial row.
RunResult run_scenario(const RobotModel& model, const Scenario& scenario,
                       std::vector<LegDecomposition> catalog = {});

struct PathTiming {
  double structural_mean = 0.0;
  double structural_p50 = 0.0;
  double structural_p95 = 0.0;
  double structural_max = 0.0;
  double wall_seconds = 0.0;
  double realtime_factor = 0.0;
};

struct BenchReport {
  PathTiming naive;
  PathTiming fast;
  double max_matrix_diff = 0.0;        // ∞-norm over M, C, 𝒩, 𝒥 on shared states
  double max_position_divergence = 0.0;
  int steps = 0;

  void print(std::ostream& out) const;
};

/// Runs the scenario on both evaluation paths with identical inputs, times
/// the structural evaluation, and checks the paths against each other.
BenchReport benchmark(const RobotModel& model, const Scenario& scenario,
                      std::vector<LegDecomposition> catalog = {});

}  // namespace legdyn

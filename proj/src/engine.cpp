/****************************************************************************
 * Copyright 2026 the legdyn authors.
 * This library is distributed under the terms of the Apache V2.0
 * License (obtainable from http://www.apache.org/licenses/LICENSE-2.0).
 ****************************************************************************/
#include "legdyn/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace legdyn {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Twist dexpinv(const Twist& phi, const Twist& v) {
  // Inverse right-trivialized tangent, truncated after the ad² term; the ad³
  // coefficient is zero, so the truncation error is O(|phi|⁴).
  const Matrix6d ad = ad_of(phi);
  return v - 0.5 * (ad * v) + (1.0 / 12.0) * (ad * (ad * v));
}

}  // namespace

void Scenario::validate(const RobotModel& model) const {
  if (dt <= 0.0) throw SchemaError("scenario dt must be positive");
  if (duration < 0.0) throw SchemaError("scenario duration must be non-negative");
  if (gait_enabled) {
    GaitParams g = gait;
    g.dt = dt;
    if (g.points() < 4 || g.points() % 2 != 0)
      throw SchemaError("gait cycle must span an even number (>= 4) of steps");
    if (static_cast<int>(g.phase_group.size()) != model.leg_count())
      throw SchemaError("gait phase groups must list one group per leg");
  }
  for (const auto& e : events) {
    if (e.time < 0.0 || e.time > duration)
      throw SchemaError("damage event time outside [0, duration]");
    for (int leg : e.remove_legs)
      if (leg < 0 || leg >= model.leg_count()) throw SchemaError("damage event leg out of range");
    for (const auto& r : e.remove_links) {
      if (r.leg < 0 || r.leg >= model.leg_count())
        throw SchemaError("damage event leg out of range");
      if (r.first_removed_link < 0 || r.first_removed_link >= model.leg_dof(r.leg))
        throw SchemaError("damage event link out of range");
    }
    for (const auto& l : e.lock_joints)
      if (l.leg < 0 || l.leg >= model.leg_count() || l.joint < 0 ||
          l.joint >= model.leg_dof(l.leg))
        throw SchemaError("lock event joint out of range");
  }
  if (initial_theta && initial_theta->size() != model.total_dof())
    throw SchemaError("initial_theta has the wrong length");
  if (initial_velocity && initial_velocity->size() != 6 + model.total_dof())
    throw SchemaError("initial_velocity has the wrong length");
}

Simulation::Simulation(const RobotModel& model, const Scenario& scenario,
                       std::vector<LegDecomposition> catalog)
    : model_(&model),
      scenario_(scenario),
      mv_(MorphologyVectors::healthy(model)),
      state_(RobotState::zero(model)),
      pid_(model.total_dof(), scenario.gains),
      lock_angle_(Eigen::VectorXd::Zero(model.total_dof())) {
  scenario_.gait.dt = scenario_.dt;  // the gait index advances once per step
  scenario_.validate(model);

  if (scenario_.path == EvalPath::Fast) {
    if (catalog.empty()) {
      fast_.emplace(FastEvaluator::build(model, mv_));
    } else {
      fast_.emplace(model, mv_, std::move(catalog));
    }
  } else {
    naive_.emplace(model, mv_);
  }

  active_joints_.assign(model.total_dof(), 1);
  locked_.assign(model.total_dof(), 0);
  tip_force_spatial_.assign(model.leg_count(), Vector3d::Zero());
  vdot_ = Eigen::VectorXd::Zero(6 + model.total_dof());

  state_.body_pose.position.z() = scenario_.gait.body_height;
  if (scenario_.gait_enabled) {
    for (int i = 0; i < model.leg_count(); ++i) ik_.push_back(hexapod_ik_geometry(model, i));
    for (int i = 0; i < model.leg_count(); ++i) {
      const Vector3d hip = model.attachment(i).hip.position;
      Vector3d target = gait_reference(hip, scenario_.gait.phase_group[i], 0, scenario_.gait);
      target = clamp_to_workspace(ik_[i], target);
      state_.theta.segment(model.joint_offset(i), 3) = leg_ik(ik_[i], target);
    }
  }
  if (scenario_.initial_theta) state_.theta = *scenario_.initial_theta;
  if (scenario_.initial_velocity) state_.v = *scenario_.initial_velocity;
}

const ReducedIndex& reduced_of(const std::optional<NaiveEvaluator>& n,
                               const std::optional<FastEvaluator>& f) {
  return n ? n->reduced() : f->reduced();
}

const StructuralMatrices& Simulation::evaluate_at(const RobotState& state) {
  const auto start = Clock::now();
  const StructuralMatrices& sm = naive_ ? naive_->evaluate(state) : fast_->evaluate(state);
  const double dt = seconds_since(start);
  structural_seconds_ += dt;
  structural_samples_.push_back(dt);
  last_structural_ = &sm;
  return sm;
}

void Simulation::compute_references(Eigen::VectorXd& theta_des,
                                    Eigen::VectorXd& theta_dot_des) const {
  const int nt = model_->total_dof();
  theta_des = state_.theta;
  theta_dot_des = Eigen::VectorXd::Zero(nt);
  for (int i = 0; i < model_->leg_count(); ++i) {
    const Vector3d hip = model_->attachment(i).hip.position;
    Vector3d now = gait_reference(hip, scenario_.gait.phase_group[i], step_index_, scenario_.gait);
    Vector3d next =
        gait_reference(hip, scenario_.gait.phase_group[i], step_index_ + 1, scenario_.gait);
    const Vector3d angles_now = leg_ik(ik_[i], clamp_to_workspace(ik_[i], now));
    const Vector3d angles_next = leg_ik(ik_[i], clamp_to_workspace(ik_[i], next));
    theta_des.segment<3>(model_->joint_offset(i)) = angles_now;
    theta_dot_des.segment<3>(model_->joint_offset(i)) = (angles_next - angles_now) / scenario_.dt;
  }
  for (int g = 0; g < nt; ++g) {
    if (locked_[g]) {
      theta_des[g] = lock_angle_[g];
      theta_dot_des[g] = 0.0;
    }
  }
}

Eigen::VectorXd Simulation::contact_stack(const RobotState& state, const StructuralMatrices& sm,
                                          const Eigen::VectorXd& v_red, bool record) {
  const ReducedIndex& idx = reduced_of(naive_, fast_);
  Eigen::VectorXd stacked = Eigen::VectorXd::Zero(6 * idx.tip_count());
  if (record) tip_force_spatial_.assign(model_->leg_count(), Vector3d::Zero());
  if (!scenario_.contact_enabled) return stacked;

  LegSweep sweep;
  for (int i = 0; i < model_->leg_count(); ++i) {
    if (!idx.tip_present(i)) continue;
    const LegGeometry& geom = model_->leg(i);
    sweep.build(geom, state.theta.data() + model_->joint_offset(i), geom.dof);
    const Pose tip = state.body_pose * sweep.tip_pose(geom);
    const int tb = idx.tip_block(i);
    const Vector6d tip_twist = sm.contact_jacobian.middleRows<6>(6 * tb) * v_red;
    const Vector3d tip_velocity = tip.rotation * tip_twist.head<3>();
    const Wrench wrench = contact_wrench(tip, tip_velocity, scenario_.contact);
    stacked.segment<6>(6 * tb) = wrench;
    if (record) tip_force_spatial_[i] = tip.rotation * wrench.head<3>();
  }
  return stacked;
}

Eigen::VectorXd Simulation::acceleration(const RobotState& state,
                                         const Eigen::VectorXd& tau_red) {
  const ReducedIndex& idx = reduced_of(naive_, fast_);
  const StructuralMatrices& sm = evaluate_at(state);
  const Eigen::VectorXd v_red = idx.gather_velocity(state.v);
  const Eigen::VectorXd contact =
      contact_stack(state, sm, v_red, /*record=*/&state == &state_);

  Eigen::VectorXd rhs = tau_red - sm.coriolis * v_red;
  if (scenario_.gravity_enabled) rhs -= sm.potential;
  if (contact.size() > 0) rhs += sm.contact_jacobian.transpose() * contact;
  return solve_mass(sm.mass, rhs);
}

void Simulation::integrate_semi_implicit(const Eigen::VectorXd& tau_red) {
  const ReducedIndex& idx = reduced_of(naive_, fast_);
  Eigen::VectorXd v_red = idx.gather_velocity(state_.v);
  const Eigen::VectorXd a = acceleration(state_, tau_red);
  vdot_.setZero();
  idx.scatter_velocity(a, vdot_);

  v_red += scenario_.dt * a;
  // Updated velocities drive the configuration: group exponential for the
  // body, forward Euler on the present joints.
  state_.body_pose = state_.body_pose * exp_twist(scenario_.dt * v_red.head<6>());
  const auto& joints = idx.present_joints();
  for (std::size_t k = 0; k < joints.size(); ++k)
    state_.theta[joints[k]] += scenario_.dt * v_red[6 + k];
  idx.scatter_velocity(v_red, state_.v);
}

void Simulation::integrate_rk4(const Eigen::VectorXd& tau_red) {
  const ReducedIndex& idx = reduced_of(naive_, fast_);
  const Pose base = state_.body_pose;
  const Eigen::VectorXd theta_base = state_.theta;
  const int nj = idx.joint_count();

  // Stage state y = (phi, present joint angles, reduced velocity); the body
  // pose is base·exp(phi).
  struct StageState {
    Twist phi;
    Eigen::VectorXd q;
    Eigen::VectorXd v;
  };
  struct StageRate {
    Twist phi_dot;
    Eigen::VectorXd q_dot;
    Eigen::VectorXd v_dot;
  };

  RobotState scratch = state_;
  auto rate = [&](const StageState& y) {
    scratch.body_pose = base * exp_twist(y.phi);
    scratch.theta = theta_base;
    const auto& joints = idx.present_joints();
    for (int k = 0; k < nj; ++k) scratch.theta[joints[k]] = y.q[k];
    idx.scatter_velocity(y.v, scratch.v);

    StageRate r;
    r.phi_dot = dexpinv(y.phi, y.v.head<6>());
    r.q_dot = y.v.tail(nj);
    r.v_dot = acceleration(scratch, tau_red);
    return r;
  };
  auto advance = [&](const StageState& y, const StageRate& r, double h) {
    StageState out;
    out.phi = y.phi + h * r.phi_dot;
    out.q = y.q + h * r.q_dot;
    out.v = y.v + h * r.v_dot;
    return out;
  };

  StageState y0{Twist::Zero(), idx.gather_joints(state_.theta), idx.gather_velocity(state_.v)};
  const double h = scenario_.dt;
  const StageRate k1 = rate(y0);
  const StageRate k2 = rate(advance(y0, k1, h / 2));
  const StageRate k3 = rate(advance(y0, k2, h / 2));
  const StageRate k4 = rate(advance(y0, k3, h));

  StageState yf;
  yf.phi = y0.phi + (h / 6.0) * (k1.phi_dot + 2 * k2.phi_dot + 2 * k3.phi_dot + k4.phi_dot);
  yf.q = y0.q + (h / 6.0) * (k1.q_dot + 2 * k2.q_dot + 2 * k3.q_dot + k4.q_dot);
  yf.v = y0.v + (h / 6.0) * (k1.v_dot + 2 * k2.v_dot + 2 * k3.v_dot + k4.v_dot);

  vdot_.setZero();
  idx.scatter_velocity(k1.v_dot, vdot_);

  state_.body_pose = base * exp_twist(yf.phi);
  const auto& joints = idx.present_joints();
  for (int k = 0; k < nj; ++k) state_.theta[joints[k]] = yf.q[k];
  idx.scatter_velocity(yf.v, state_.v);
}

void Simulation::check_divergence() const {
  if (!state_.v.allFinite() ||
      state_.v.cwiseAbs().maxCoeff() > scenario_.divergence_bound)
    throw NumericalDivergenceError("quasi-velocity norm exceeded the configured bound at step " +
                                   std::to_string(step_index_));
}

void Simulation::step() {
  const ReducedIndex& idx = reduced_of(naive_, fast_);
  Eigen::VectorXd tau_red = Eigen::VectorXd::Zero(idx.dof());
  if (scenario_.gait_enabled) {
    Eigen::VectorXd theta_des, theta_dot_des;
    compute_references(theta_des, theta_dot_des);
    const Eigen::VectorXd tau_full =
        pid_.compute(theta_des, theta_dot_des, state_.theta, state_.v.tail(model_->total_dof()),
                     active_joints_, scenario_.dt);
    const auto& joints = idx.present_joints();
    for (std::size_t k = 0; k < joints.size(); ++k) tau_red[6 + k] = tau_full[joints[k]];
  }

  if (scenario_.integrator == Integrator::SemiImplicitEuler) {
    integrate_semi_implicit(tau_red);
  } else {
    integrate_rk4(tau_red);
  }

  ++step_index_;
  time_ += scenario_.dt;
  if (step_index_ % 512 == 0) state_.body_pose.orthonormalize();
  check_divergence();
}

void Simulation::inject_damage(const DamageEvent& event) {
  const MorphologyVectors before = mv_;
  mv_ = apply_damage(*model_, mv_, event);
  if (!(mv_ == before)) {
    if (naive_) naive_->set_morphology(mv_);
    if (fast_) fast_->set_morphology(mv_);
    const ReducedIndex& idx = reduced_of(naive_, fast_);
    for (int g = 0; g < model_->total_dof(); ++g) {
      bool present = false;
      for (int gp : idx.present_joints()) present = present || gp == g;
      if (!present) {
        state_.v[6 + g] = 0.0;
        pid_.clear_joint(g);
        active_joints_[g] = 0;
      }
    }
  }
  for (const auto& l : event.lock_joints) {
    const int g = model_->joint_offset(l.leg) + l.joint;
    locked_[g] = 1;
    lock_angle_[g] = state_.theta[g];
  }
}

double Simulation::energy() const {
  return total_energy(*model_, mv_, state_);
}

TrajectoryRow Simulation::snapshot() const {
  TrajectoryRow row;
  row.t = time_;
  row.position = state_.body_pose.position;
  row.rpy = zyx_euler(state_.body_pose.rotation, &row.gimbal);
  row.theta = state_.theta;
  row.v = state_.v;
  row.tip_force = tip_force_spatial_;
  row.energy = energy();
  return row;
}

void TrajectoryLog::write_csv(std::ostream& out) const {
  out << "# legdyn trajectory schema 1\n";
  if (rows.empty()) return;
  out << "t,x,y,z,roll,pitch,yaw";
  for (int j = 0; j < rows.front().theta.size(); ++j) out << ",theta_" << (j + 1);
  for (std::size_t i = 0; i < rows.front().tip_force.size(); ++i)
    out << ",tip" << (i + 1) << "_fx,tip" << (i + 1) << "_fy,tip" << (i + 1) << "_fz";
  out << ",energy,gimbal_flag\n";
  out << std::setprecision(17);
  for (const auto& row : rows) {
    out << row.t << ',' << row.position.x() << ',' << row.position.y() << ','
        << row.position.z() << ',' << row.rpy.x() << ',' << row.rpy.y() << ',' << row.rpy.z();
    for (int j = 0; j < row.theta.size(); ++j) out << ',' << row.theta[j];
    for (const auto& f : row.tip_force) out << ',' << f.x() << ',' << f.y() << ',' << f.z();
    out << ',' << row.energy << ',' << (row.gimbal ? 1 : 0) << '\n';
  }
}

void TrajectoryLog::write_csv_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot open trajectory output: " + path);
  write_csv(out);
}

RunResult run_scenario(const RobotModel& model, const Scenario& scenario,
                       std::vector<LegDecomposition> catalog) {
  Simulation sim(model, scenario, std::move(catalog));

  std::vector<DamageEvent> events = scenario.events;
  std::stable_sort(events.begin(), events.end(),
                   [](const DamageEvent& a, const DamageEvent& b) { return a.time < b.time; });
  std::size_t next_event = 0;

  const int steps = static_cast<int>(std::lround(scenario.duration / scenario.dt));
  RunResult result;
  result.log.rows.reserve(steps + 1);

  const auto start = Clock::now();
  for (int k = 0; k < steps; ++k) {
    while (next_event < events.size() && events[next_event].time <= sim.time() + 1e-12) {
      sim.inject_damage(events[next_event]);
      ++next_event;
    }
    result.log.rows.push_back(sim.snapshot());
    sim.step();
  }
  result.log.rows.push_back(sim.snapshot());
  const double wall = seconds_since(start);

  RunSummary& s = result.summary;
  s.steps = steps;
  s.sim_seconds = scenario.duration;
  s.wall_seconds = wall;
  s.realtime_factor = wall > 0.0 ? scenario.duration / wall : 0.0;
  s.net_displacement =
      result.log.rows.back().position - result.log.rows.front().position;
  s.rpy_min = s.rpy_max = result.log.rows.front().rpy;
  for (const auto& row : result.log.rows) {
    s.rpy_min = s.rpy_min.cwiseMin(row.rpy);
    s.rpy_max = s.rpy_max.cwiseMax(row.rpy);
  }

  if (!scenario.output_csv.empty()) result.log.write_csv_file(scenario.output_csv);
  return result;
}

namespace {

PathTiming summarize(const std::vector<double>& samples, double sim_seconds, double wall) {
  PathTiming t;
  if (samples.empty()) return t;
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  for (double s : sorted) total += s;
  t.structural_mean = total / sorted.size();
  t.structural_p50 = sorted[sorted.size() / 2];
  t.structural_p95 = sorted[static_cast<std::size_t>(sorted.size() * 0.95)];
  t.structural_max = sorted.back();
  t.wall_seconds = wall;
  t.realtime_factor = wall > 0.0 ? sim_seconds / wall : 0.0;
  return t;
}

}  // namespace

BenchReport benchmark(const RobotModel& model, const Scenario& scenario,
                      std::vector<LegDecomposition> catalog) {
  if (catalog.empty())
    for (int a = 0; a < model.catalog_size(); ++a)
      catalog.push_back(decompose_leg(model.catalog_entry(a)));

  std::vector<DamageEvent> events = scenario.events;
  std::stable_sort(events.begin(), events.end(),
                   [](const DamageEvent& a, const DamageEvent& b) { return a.time < b.time; });
  const int steps = static_cast<int>(std::lround(scenario.duration / scenario.dt));

  auto timed_run = [&](EvalPath path, std::vector<Vector3d>& positions,
                       std::vector<double>& samples) {
    Scenario s = scenario;
    s.path = path;
    s.output_csv.clear();
    Simulation sim(model, s, catalog);
    std::size_t next_event = 0;
    positions.reserve(steps + 1);
    const auto start = Clock::now();
    for (int k = 0; k < steps; ++k) {
      while (next_event < events.size() && events[next_event].time <= sim.time() + 1e-12) {
        sim.inject_damage(events[next_event]);
        ++next_event;
      }
      positions.push_back(sim.state().body_pose.position);
      sim.step();
    }
    positions.push_back(sim.state().body_pose.position);
    const double wall = seconds_since(start);
    samples = sim.structural_step_seconds();
    return wall;
  };

  BenchReport report;
  report.steps = steps;
  std::vector<Vector3d> pos_naive, pos_fast;
  std::vector<double> t_naive, t_fast;
  const double wall_naive = timed_run(EvalPath::Naive, pos_naive, t_naive);
  const double wall_fast = timed_run(EvalPath::Fast, pos_fast, t_fast);
  report.naive = summarize(t_naive, scenario.duration, wall_naive);
  report.fast = summarize(t_fast, scenario.duration, wall_fast);

  for (std::size_t k = 0; k < pos_naive.size() && k < pos_fast.size(); ++k)
    report.max_position_divergence =
        std::max(report.max_position_divergence, (pos_naive[k] - pos_fast[k]).norm());

  // Path equivalence on shared states: replay on the closed-form path and
  // evaluate both evaluators at every logged state.
  {
    Scenario s = scenario;
    s.path = EvalPath::Naive;
    s.output_csv.clear();
    Simulation sim(model, s, catalog);
    FastEvaluator fast(model, sim.morphology(), catalog);
    NaiveEvaluator naive(model, sim.morphology());
    MorphologyVectors last_mv = sim.morphology();
    std::size_t next_event = 0;
    for (int k = 0; k <= steps; ++k) {
      while (next_event < events.size() && events[next_event].time <= sim.time() + 1e-12) {
        sim.inject_damage(events[next_event]);
        ++next_event;
      }
      if (!(sim.morphology() == last_mv)) {
        last_mv = sim.morphology();
        fast.set_morphology(last_mv);
        naive.set_morphology(last_mv);
      }
      const StructuralMatrices& a = naive.evaluate(sim.state());
      const StructuralMatrices& b = fast.evaluate(sim.state());
      double diff = (a.mass - b.mass).cwiseAbs().maxCoeff();
      diff = std::max(diff, (a.coriolis - b.coriolis).cwiseAbs().maxCoeff());
      diff = std::max(diff, (a.potential - b.potential).cwiseAbs().maxCoeff());
      diff = std::max(diff, (a.contact_jacobian - b.contact_jacobian).cwiseAbs().maxCoeff());
      report.max_matrix_diff = std::max(report.max_matrix_diff, diff);
      if (k < steps) sim.step();
    }
  }
  return report;
}

void BenchReport::print(std::ostream& out) const {
  auto us = [](double s) { return s * 1e6; };
  out << "steps: " << steps << "\n";
  out << "path        structural mean/p50/p95/max [us]      wall [s]   realtime factor\n";
  auto line = [&](const char* name, const PathTiming& t) {
    out << name << "  " << std::fixed << std::setprecision(2) << us(t.structural_mean) << " / "
        << us(t.structural_p50) << " / " << us(t.structural_p95) << " / "
        << us(t.structural_max) << "      " << std::setprecision(3) << t.wall_seconds
        << "      " << std::setprecision(2) << t.realtime_factor << "\n";
  };
  line("closed-form", naive);
  line("decomposed ", fast);
  out << std::scientific << std::setprecision(3);
  out << "max structural-matrix difference on shared states: " << max_matrix_diff << "\n";
  out << "max body-position divergence between paths: " << max_position_divergence << "\n";
}

}  // namespace legdyn

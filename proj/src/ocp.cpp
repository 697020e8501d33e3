#include "windplan/ocp.hpp"

#include <algorithm>
#include <cmath>

namespace windplan {

TrajectoryPlan solve(const Transcription& nlp, const Eigen::VectorXd& guess)
{
  const TranscriptionConfig& cfg = nlp.config();
  SolverOptions options;
  options.feasibility_tol = cfg.feasibility_tol;
  options.optimality_tol = cfg.optimality_tol;
  options.max_total_iterations = cfg.max_iterations;
  options.feasibility_hold = {nlp.final_time_index()};
  const SolverResult r = solve_augmented_lagrangian(nlp, guess, options);

  TrajectoryPlan plan;
  plan.scheme = cfg.scheme;
  plan.t_init_s = nlp.boundary().t_init_s;
  plan.thrust_max_n = nlp.bounds().thrust_max_n;
  const int k_max = nlp.segments();
  const double t_final = nlp.final_time(r.z);
  plan.times.resize(k_max + 1);
  plan.states.resize(kStateDim, k_max + 1);
  plan.controls.resize(kControlDim, k_max + 1);
  for (int k = 0; k <= k_max; ++k) {
    plan.times(k) = plan.t_init_s + (t_final - plan.t_init_s) * double(k) / k_max;
    plan.states.col(k) = nlp.node_state(r.z, k);
    plan.controls.col(k) = nlp.node_control(r.z, k);
  }
  plan.times(k_max) = t_final;
  plan.cost_s = t_final - plan.t_init_s;

  SolverDiagnostics& d = plan.diagnostics;
  d.max_defect = r.max_violation;
  d.max_bound_violation = std::max((nlp.lower() - r.z).maxCoeff(), (r.z - nlp.upper()).maxCoeff());
  d.max_bound_violation = std::max(d.max_bound_violation, 0.0);
  d.optimality = r.optimality;
  d.iterations = r.inner_iterations;
  d.outer_iterations = r.outer_iterations;
  d.converged = r.converged;
  return plan;
}

TrajectoryPlan plan_trajectory(const BoundarySpec& boundary, const PathBounds& bounds, const WindFunction& wind,
                               const VehicleParams& params, const TranscriptionConfig& cfg)
{
  const Transcription primary = transcribe(boundary, bounds, wind, params, cfg);
  TrajectoryPlan plan = solve(primary, primary.initial_guess(cfg.guess_seed));
  if (plan.diagnostics.converged || cfg.scheme == CollocationScheme::Trapezoidal)
    return plan;

  TranscriptionConfig trap_cfg = cfg;
  trap_cfg.scheme = CollocationScheme::Trapezoidal;
  const Transcription fallback = transcribe(boundary, bounds, wind, params, trap_cfg);
  const TrajectoryPlan trap = solve(fallback, fallback.initial_guess(cfg.guess_seed));
  if (!trap.diagnostics.converged)
    return plan;

  TrajectoryPlan warm = solve(primary, primary.pack(trap.times, trap.states, trap.controls, trap.t_final_s()));
  warm.diagnostics.iterations += plan.diagnostics.iterations + trap.diagnostics.iterations;
  return warm.diagnostics.converged ? warm : trap;
}

namespace {

/// Fritsch-Carlson slopes: monotone between knots, so no overshoot past node values.
Eigen::VectorXd pchip_slopes(const Eigen::VectorXd& t, const Eigen::VectorXd& y)
{
  const Eigen::Index n = t.size();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd h = t.tail(n - 1) - t.head(n - 1);
  Eigen::VectorXd delta = (y.tail(n - 1) - y.head(n - 1)).cwiseQuotient(h);
  if (n == 2) {
    m.setConstant(delta(0));
    return m;
  }
  for (Eigen::Index k = 1; k + 1 < n; ++k) {
    if (delta(k - 1) * delta(k) <= 0.0)
      continue;
    const double w1 = 2.0 * h(k) + h(k - 1);
    const double w2 = h(k) + 2.0 * h(k - 1);
    m(k) = (w1 + w2) / (w1 / delta(k - 1) + w2 / delta(k));
  }
  auto end_slope = [](double h0, double h1, double d0, double d1) {
    double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (s * d0 <= 0.0)
      s = 0.0;
    else if (d0 * d1 <= 0.0 && std::abs(s) > std::abs(3.0 * d0))
      s = 3.0 * d0;
    return s;
  };
  m(0) = end_slope(h(0), h(1), delta(0), delta(1));
  m(n - 1) = end_slope(h(n - 2), h(n - 3), delta(n - 2), delta(n - 3));
  return m;
}

}  // namespace

ControlSchedule control_schedule(const TrajectoryPlan& plan, ControlInterpolation mode)
{
  const Eigen::VectorXd t = plan.times;
  const Eigen::Matrix<double, 2, Eigen::Dynamic> u = plan.controls;
  const double umax = plan.thrust_max_n;
  std::array<Eigen::VectorXd, 2> slopes;
  if (mode == ControlInterpolation::Pchip)
    for (int i = 0; i < 2; ++i)
      slopes[std::size_t(i)] = pchip_slopes(t, u.row(i).transpose());

  return [t, u, umax, mode, slopes](double time) {
    const Eigen::Index n = t.size();
    const double tc = std::clamp(time, t(0), t(n - 1));
    Eigen::Index k = Eigen::Index(std::upper_bound(t.data(), t.data() + n, tc) - t.data()) - 1;
    k = std::clamp<Eigen::Index>(k, 0, n - 2);
    const double h = t(k + 1) - t(k);
    const double s = (tc - t(k)) / h;
    ControlInput out;
    for (int i = 0; i < 2; ++i) {
      const double y0 = u(i, k), y1 = u(i, k + 1);
      if (mode == ControlInterpolation::Linear) {
        out(i) = y0 + s * (y1 - y0);
      } else {
        const double m0 = slopes[std::size_t(i)](k), m1 = slopes[std::size_t(i)](k + 1);
        const double s2 = s * s, s3 = s2 * s;
        out(i) = (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * m0 + (-2 * s3 + 3 * s2) * y1 +
                 (s3 - s2) * h * m1;
      }
      out(i) = std::clamp(out(i), 0.0, umax);
    }
    return out;
  };
}

VerificationReport verify(const TrajectoryPlan& plan, const WindFunction& wind_estimate,
                          const WindFunction& wind_true, const VehicleParams& params, ControlInterpolation mode,
                          int samples)
{
  const ControlSchedule control = control_schedule(plan, mode);
  const double t0 = plan.times(0);
  const double t1 = plan.t_final_s();
  std::vector<double> outputs;
  for (int i = 0; i < samples; ++i)
    outputs.push_back(i + 1 == samples ? t1 : t0 + (t1 - t0) * double(i) / (samples - 1));
  const std::vector<double> knots(plan.times.data(), plan.times.data() + plan.times.size());
  const QuadState x0 = plan.states.col(0);

  VerificationReport report;
  report.planned_final = plan.final_state();
  report.estimated_replay = integrate(x0, control, wind_estimate, t0, t1, params, outputs, knots);
  report.true_replay = integrate(x0, control, wind_true, t0, t1, params, outputs, knots);
  report.estimated_final = report.estimated_replay.states.back();
  report.true_final = report.true_replay.states.back();

  const Eigen::Vector2d start = x0.head<2>();
  const Eigen::Vector2d waypoint = report.planned_final.head<2>();
  report.waypoint_distance_m = (waypoint - start).norm();
  report.gate_tolerance_m = 0.02 * report.waypoint_distance_m;
  report.estimated_miss_m = (report.estimated_final.head<2>() - waypoint).norm();
  report.final_error_m = (report.true_final.head<2>() - waypoint).norm();
  report.passed = report.estimated_miss_m <= report.gate_tolerance_m;
  return report;
}

}  // namespace windplan

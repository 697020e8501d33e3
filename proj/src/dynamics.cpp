#include "windplan/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <boost/numeric/odeint.hpp>

namespace windplan {

namespace odeint = boost::numeric::odeint;

void VehicleParams::validate() const
{
  for (double v : {mass_kg, drag_coeff_x, drag_coeff_z, area_x_m2, area_z_m2, thrust_max_n, air_density,
                   pitch_inertia, arm_m, gravity})
    if (!(v > 0.0))
      throw std::invalid_argument("vehicle parameters must be strictly positive");
}

namespace {

using OdeState = std::array<double, kStateDim>;

struct LongitudinalSystem
{
  const ControlSchedule& control;
  const WindFunction& wind;
  const VehicleParams& params;

  void operator()(const OdeState& x, OdeState& dxdt, double t) const
  {
    const QuadState xs = Eigen::Map<const QuadState>(x.data());
    Eigen::Map<QuadState>(dxdt.data()) = eom(xs, control(t), wind, t, params);
  }
};

std::vector<double> merged_stops(double t_begin, double t_end, std::span<const double> a, std::span<const double> b)
{
  std::vector<double> stops;
  for (auto src : {a, b})
    for (double t : src)
      if (t > t_begin && t < t_end)
        stops.push_back(t);
  stops.push_back(t_end);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
  return stops;
}

}  // namespace

SampledTrajectory integrate(const QuadState& initial, const ControlSchedule& control, const WindFunction& wind,
                            double t_begin, double t_end, const VehicleParams& params,
                            std::span<const double> output_times, std::span<const double> breakpoints,
                            IntegratorTolerance tol)
{
  if (!(t_end > t_begin))
    throw std::invalid_argument("integration span must be increasing");

  LongitudinalSystem system{control, wind, params};
  OdeState x;
  Eigen::Map<QuadState>(x.data()) = initial;

  std::vector<double> outputs(output_times.begin(), output_times.end());
  std::sort(outputs.begin(), outputs.end());
  const std::vector<double> knots = merged_stops(t_begin, t_end, breakpoints, {});
  const std::vector<double> stops = merged_stops(t_begin, t_end, breakpoints, outputs);

  SampledTrajectory out;
  auto record = [&](double t) {
    out.times.push_back(t);
    out.states.push_back(Eigen::Map<const QuadState>(x.data()));
  };
  for (double t : outputs)
    if (t == t_begin) {
      record(t);
      break;
    }

  const double min_step = 1e-13 * std::max(1.0, std::abs(t_end));
  double t = t_begin;
  double dt = std::min(1e-3, t_end - t_begin);
  auto next_knot = knots.begin();
  auto stepper = odeint::make_controlled(tol.absolute, tol.relative, odeint::runge_kutta_dopri5<OdeState>());

  for (double stop : stops) {
    while (t < stop) {
      const double remaining = stop - t;
      double trial = std::min(dt, remaining);
      const bool lands = trial >= remaining;
      if (lands)
        trial = remaining;
      double t_try = t;
      double dt_try = trial;
      if (stepper.try_step(system, x, t_try, dt_try) == odeint::success) {
        t = lands ? stop : t_try;
        // keep the grown step proposal unless the landing step was artificially short
        dt = lands ? std::max(dt, dt_try) : dt_try;
      } else {
        dt = dt_try;
        if (dt < min_step)
          throw StepSizeUnderflow("step size underflow at t = " + std::to_string(t) + " s");
      }
    }
    if (next_knot != knots.end() && *next_knot == stop) {
      // control kink: drop the FSAL derivative cache
      stepper.reset();
      ++next_knot;
    }
    if (std::binary_search(outputs.begin(), outputs.end(), stop) || stop == t_end)
      record(stop);
  }
  return out;
}

QuadState integrate_rk4(const QuadState& initial, const ControlSchedule& control, const WindFunction& wind,
                        double t_begin, double t_end, int steps, const VehicleParams& params)
{
  if (steps < 1)
    throw std::invalid_argument("rk4 needs at least one step");
  LongitudinalSystem system{control, wind, params};
  OdeState x;
  Eigen::Map<QuadState>(x.data()) = initial;
  odeint::runge_kutta4<OdeState> rk4;
  const double h = (t_end - t_begin) / steps;
  for (int k = 0; k < steps; ++k)
    rk4.do_step(system, x, t_begin + k * h, h);
  return Eigen::Map<const QuadState>(x.data());
}

}  // namespace windplan

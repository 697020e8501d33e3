#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "windplan/wind_function.hpp"

namespace windplan {

/// Longitudinal quadrotor parameters; defaults are the reference vehicle.
struct VehicleParams
{
  double mass_kg = 3.696;
  double drag_coeff_x = 0.8;
  double drag_coeff_z = 0.4;
  double area_x_m2 = 0.0279;
  double area_z_m2 = 0.109;
  double thrust_max_n = 41.6964;
  double air_density = 1.293;
  double pitch_inertia = 0.0292;
  double arm_m = 0.254;
  double gravity = 9.81;

  void validate() const;
  double hover_thrust() const { return 0.5 * mass_kg * gravity; }
};

/// State layout [p_N, p_D, theta, u_r, w_r, q].
enum StateIndex : Eigen::Index { kNorth = 0, kDown, kPitch, kSurge, kHeave, kPitchRate };
inline constexpr int kStateDim = 6;
inline constexpr int kControlDim = 2;

template <typename Scalar>
using StateVector = Eigen::Matrix<Scalar, kStateDim, 1>;
template <typename Scalar>
using ControlVector = Eigen::Matrix<Scalar, kControlDim, 1>;

using QuadState = StateVector<double>;
/// [T_f, T_r] in newtons.
using ControlInput = ControlVector<double>;

/// v |v|, written without abs() so nested autodiff types work.
template <typename Scalar>
Scalar signed_square(const Scalar& v)
{
  const Scalar sq = v * v;
  return v < Scalar(0.0) ? Scalar(-sq) : sq;
}

/// Quadratic drag opposing the flow-relative velocity; sign(0) = 0.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> drag_forces(const StateVector<Scalar>& x, const VehicleParams& p)
{
  const double kx = 0.5 * p.air_density * p.drag_coeff_x * p.area_x_m2;
  const double kz = 0.5 * p.air_density * p.drag_coeff_z * p.area_z_m2;
  const Scalar& ur = x(kSurge);
  const Scalar& wr = x(kHeave);
  Eigen::Matrix<Scalar, 2, 1> f;
  f << -kx * signed_square(ur), -kz * signed_square(wr);
  return f;
}

/// State derivative for a given north wind value.
template <typename Scalar>
StateVector<Scalar> eom(const StateVector<Scalar>& x, const ControlVector<Scalar>& u, const Scalar& wind_north,
                        const VehicleParams& p)
{
  using std::cos;
  using std::sin;
  const Scalar s = sin(x(kPitch));
  const Scalar c = cos(x(kPitch));
  const Scalar& ur = x(kSurge);
  const Scalar& wr = x(kHeave);
  const Scalar& q = x(kPitchRate);
  const auto drag = drag_forces<Scalar>(x, p);
  const double mg = p.mass_kg * p.gravity;

  const Scalar f1 = -mg * s + drag(0);
  const Scalar f3 = mg * c + drag(1) - u(0) - u(1);
  const Scalar tau2 = (u(0) - u(1)) * p.arm_m;

  StateVector<Scalar> dx;
  dx(kNorth) = ur * c + wr * s + wind_north;
  dx(kDown) = -ur * s + wr * c;
  dx(kPitch) = q;
  dx(kSurge) = -q * wr + f1 / p.mass_kg;
  dx(kHeave) = q * ur + f3 / p.mass_kg;
  dx(kPitchRate) = tau2 / p.pitch_inertia;
  return dx;
}

inline QuadState eom(const QuadState& x, const ControlInput& u, const WindFunction& wind, double t_s,
                     const VehicleParams& p)
{
  return eom<double>(x, u, wind(x(kNorth), t_s), p);
}

using ControlSchedule = std::function<ControlInput(double)>;

struct IntegratorTolerance
{
  double relative = 1e-9;
  double absolute = 1e-9;
};

/// Adaptive step collapsed, usually a sign of a blow-up.
class StepSizeUnderflow : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct SampledTrajectory
{
  std::vector<double> times;
  std::vector<QuadState> states;
};

/**
 * Dormand-Prince 5(4) integration of the longitudinal dynamics.
 *
 * The step is restarted at every `breakpoints` entry inside the span (control
 * knots) so the error controller never straddles a control kink. States are
 * returned at each requested output time; t_end is always appended.
 */
SampledTrajectory integrate(const QuadState& initial, const ControlSchedule& control, const WindFunction& wind,
                            double t_begin, double t_end, const VehicleParams& params,
                            std::span<const double> output_times = {}, std::span<const double> breakpoints = {},
                            IntegratorTolerance tol = {});

/// Classical fixed-step RK4 with `steps` equal steps; returns the final state.
QuadState integrate_rk4(const QuadState& initial, const ControlSchedule& control, const WindFunction& wind,
                        double t_begin, double t_end, int steps, const VehicleParams& params);

}  // namespace windplan

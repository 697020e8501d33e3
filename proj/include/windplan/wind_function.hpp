#pragma once

#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace windplan {

/// Query outside the wind-frame span [0, lambda] of a profile or estimate.
class OutOfSpanError : public std::out_of_range
{
public:
  OutOfSpanError(double beta, double span)
      : std::out_of_range("wind-frame coordinate " + std::to_string(beta) +
                          " m outside profile span [0, " + std::to_string(span) + "] m"),
        beta_(beta)
  {}
  double beta() const { return beta_; }

private:
  double beta_;
};

/// North wind value with its partial derivatives in the inertial frame.
struct WindSample
{
  double value = 0.0;
  double d_north = 0.0;  ///< d(delta_N)/d(p_N), 1/s
  double d_time = 0.0;   ///< d(delta_N)/dt, m/s^2
};

/**
 * Inertial-frame north wind as a function of (p_N, t).
 *
 * Bound either to a true profile or to a Kriging estimate. Both are piecewise
 * linear in the wind-frame coordinate, so the partials returned here are the
 * exact one-sided slopes of the interpolating cell.
 */
class WindFunction
{
public:
  using Sampler = std::function<WindSample(double, double)>;

  WindFunction() : WindFunction(constant(0.0)) {}
  explicit WindFunction(Sampler sampler) : sampler_(std::move(sampler)) {}

  static WindFunction constant(double value_mps)
  {
    return WindFunction([value_mps](double, double) { return WindSample{value_mps, 0.0, 0.0}; });
  }

  WindSample sample(double north_m, double t_s) const { return sampler_(north_m, t_s); }
  double operator()(double north_m, double t_s) const { return sampler_(north_m, t_s).value; }

private:
  Sampler sampler_;
};

/// Uniformly spaced points on [lo, hi].
class UniformGrid
{
public:
  UniformGrid(double lo, double hi, Eigen::Index points);

  Eigen::Index size() const { return points_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double spacing() const { return step_; }
  double operator[](Eigen::Index i) const { return i == points_ - 1 ? hi_ : lo_ + step_ * double(i); }
  Eigen::VectorXd points() const;

  /// Cell index i with x in [x_i, x_{i+1}]; throws OutOfSpanError outside [lo, hi].
  Eigen::Index locate(double x) const;

  /// Linear interpolation of `values` at x, with the cell slope.
  std::pair<double, double> interpolate(const Eigen::VectorXd& values, double x) const;

private:
  double lo_;
  double hi_;
  Eigen::Index points_;
  double step_;
};

}  // namespace windplan

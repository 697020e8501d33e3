#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "windplan/wind_function.hpp"

namespace windplan {

/// Squared-exponential GP hyperparameters plus the process mean.
struct GpHyperparams
{
  double length_scale_m = 1.0;
  double std_dev_mps = 0.0;
  double mean_mps = 0.0;

  double variance() const { return std_dev_mps * std_dev_mps; }
  void validate() const;
};

/**
 * Convection of the frozen profile through the inertial frame.
 *
 * The wind-frame coordinate of an inertial point is beta = p_N - c t, and the
 * profile is defined on [0, d + |c| t_m] so every point of the operating region
 * stays covered for t in [0, t_m].
 */
struct ConvectionSpec
{
  double speed_mps = -1.0;
  double operating_length_m = 40.0;
  double horizon_s = 30.0;

  double span_m() const { return operating_length_m + std::abs(speed_mps) * horizon_s; }
  double to_wind_frame(double north_m, double t_s) const { return north_m - speed_mps * t_s; }
  /// Sign of delta_N for a positive profile value: the air moves with the pattern.
  double flow_direction() const { return speed_mps < 0.0 ? -1.0 : 1.0; }
  void validate() const;
};

template <typename Scalar>
Scalar squared_exponential(const Scalar& lag, double length_scale, double variance)
{
  using std::exp;
  return variance * exp(-(lag * lag) / (2.0 * length_scale * length_scale));
}

/// kappa(h) = sigma^2 exp(-h^2 / (2 L^2)).
inline double kernel(double lag_m, const GpHyperparams& hyper)
{
  return squared_exponential(lag_m, hyper.length_scale_m, hyper.variance());
}

/// Kernel matrix between two point sets.
Eigen::MatrixXd kernel_matrix(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const GpHyperparams& hyper);

/// A frozen realization of the wind profile over the wind-frame grid.
struct WindProfile
{
  Eigen::VectorXd grid;
  Eigen::VectorXd values;
  GpHyperparams hyper;
  ConvectionSpec convection;
  std::uint64_t seed = 0;

  UniformGrid uniform_grid() const { return {grid(0), grid(grid.size() - 1), grid.size()}; }
};

/// Draws delta ~ N(mu 1, K) on G uniform points of [0, lambda].
///
/// Factorizes K + jitter I, escalating jitter from 1e-10 sigma^2 by decades to
/// 1e-4 sigma^2; throws std::runtime_error if every attempt fails.
WindProfile sample_profile(const GpHyperparams& hyper, const ConvectionSpec& conv, Eigen::Index grid_points,
                           std::uint64_t seed);

/// True inertial-frame north wind; throws OutOfSpanError off the profile.
double wind_at(const WindProfile& profile, double north_m, double t_s);

/// Profile as the north wind seen by the vehicle, signed by the flow direction.
WindFunction as_wind_function(const WindProfile& profile);

struct AnemometerArray
{
  std::vector<double> positions_m;
  double sample_rate_hz = 10.0;
  double noise_var = 0.0;  ///< (m/s)^2
  double sampling_end_s = 5.0;

  /// Samples per anemometer, F t_N.
  Eigen::Index samples_per_sensor() const { return Eigen::Index(std::llround(sample_rate_hz * sampling_end_s)); }
  void validate(const ConvectionSpec& conv) const;
};

struct Measurement
{
  double t_s;
  double z_m;
  double y_mps;
};

/// Rows ordered by sample time, then by anemometer.
using MeasurementLog = std::vector<Measurement>;

/// Samples every anemometer at t_k = k/F, k = 1..F t_N, adding N(0, sigma_n^2) noise.
MeasurementLog run_sensors(const WindProfile& profile, const AnemometerArray& array, std::uint64_t seed);

}  // namespace windplan

#include "windplan/windfield.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace windplan {

UniformGrid::UniformGrid(double lo, double hi, Eigen::Index points) : lo_(lo), hi_(hi), points_(points)
{
  if (points < 2 || !(hi > lo))
    throw std::invalid_argument("uniform grid needs at least two points on a nonempty interval");
  step_ = (hi - lo) / double(points - 1);
}

Eigen::VectorXd UniformGrid::points() const
{
  Eigen::VectorXd out(points_);
  for (Eigen::Index i = 0; i < points_; ++i)
    out(i) = (*this)[i];
  return out;
}

Eigen::Index UniformGrid::locate(double x) const
{
  if (!(x >= lo_ && x <= hi_))
    throw OutOfSpanError(x, hi_);
  auto i = Eigen::Index(std::floor((x - lo_) / step_));
  return std::clamp<Eigen::Index>(i, 0, points_ - 2);
}

std::pair<double, double> UniformGrid::interpolate(const Eigen::VectorXd& values, double x) const
{
  const Eigen::Index i = locate(x);
  const double x0 = (*this)[i];
  const double slope = (values(i + 1) - values(i)) / ((*this)[i + 1] - x0);
  return {values(i) + slope * (x - x0), slope};
}

void GpHyperparams::validate() const
{
  if (!(length_scale_m > 0.0))
    throw std::invalid_argument("GP length scale must be positive");
  if (!(std_dev_mps >= 0.0))
    throw std::invalid_argument("GP standard deviation must be nonnegative");
}

void ConvectionSpec::validate() const
{
  if (!(operating_length_m > 0.0) || !(horizon_s > 0.0))
    throw std::invalid_argument("operating length and horizon must be positive");
  if (!std::isfinite(speed_mps))
    throw std::invalid_argument("convection speed must be finite");
}

Eigen::MatrixXd kernel_matrix(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const GpHyperparams& hyper)
{
  Eigen::MatrixXd k(a.size(), b.size());
  for (Eigen::Index j = 0; j < b.size(); ++j)
    for (Eigen::Index i = 0; i < a.size(); ++i)
      k(i, j) = kernel(a(i) - b(j), hyper);
  return k;
}

WindProfile sample_profile(const GpHyperparams& hyper, const ConvectionSpec& conv, Eigen::Index grid_points,
                           std::uint64_t seed)
{
  hyper.validate();
  conv.validate();
  if (grid_points < 2)
    throw std::invalid_argument("profile grid needs at least two points");

  WindProfile profile;
  profile.hyper = hyper;
  profile.convection = conv;
  profile.seed = seed;
  profile.grid = UniformGrid(0.0, conv.span_m(), grid_points).points();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(grid_points);
  for (Eigen::Index i = 0; i < grid_points; ++i)
    z(i) = normal(rng);

  const double var = hyper.variance();
  if (var == 0.0) {
    profile.values = Eigen::VectorXd::Constant(grid_points, hyper.mean_mps);
    return profile;
  }

  Eigen::MatrixXd k = kernel_matrix(profile.grid, profile.grid, hyper);
  for (double jitter = 1e-10; jitter <= 1e-4 * (1.0 + 1e-9); jitter *= 10.0) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += jitter * var;
    Eigen::LLT<Eigen::MatrixXd> llt(kj);
    if (llt.info() == Eigen::Success) {
      profile.values = (llt.matrixL() * z).array() + hyper.mean_mps;
      return profile;
    }
  }
  throw std::runtime_error("kernel matrix factorization failed at maximum jitter 1e-4 sigma^2");
}

double wind_at(const WindProfile& profile, double north_m, double t_s)
{
  const double beta = profile.convection.to_wind_frame(north_m, t_s);
  return profile.uniform_grid().interpolate(profile.values, beta).first;
}

WindFunction as_wind_function(const WindProfile& profile)
{
  return WindFunction([grid = profile.uniform_grid(), values = profile.values,
                       c = profile.convection.speed_mps,
                       s = profile.convection.flow_direction()](double north_m, double t_s) {
    auto [v, slope] = grid.interpolate(values, north_m - c * t_s);
    return WindSample{s * v, s * slope, -c * s * slope};
  });
}

void AnemometerArray::validate(const ConvectionSpec& conv) const
{
  if (positions_m.empty())
    throw std::invalid_argument("anemometer array is empty");
  for (double z : positions_m)
    if (z < 0.0 || z > conv.operating_length_m)
      throw std::invalid_argument("anemometer position outside the operating region");
  if (!(sample_rate_hz > 0.0) || !(noise_var >= 0.0) || !(sampling_end_s >= 0.0))
    throw std::invalid_argument("invalid anemometer sampling parameters");
}

MeasurementLog run_sensors(const WindProfile& profile, const AnemometerArray& array, std::uint64_t seed)
{
  array.validate(profile.convection);
  const Eigen::Index n = array.samples_per_sensor();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sigma_n = std::sqrt(array.noise_var);

  MeasurementLog log;
  log.reserve(std::size_t(n) * array.positions_m.size());
  for (Eigen::Index k = 1; k <= n; ++k) {
    const double t = double(k) / array.sample_rate_hz;
    for (double z : array.positions_m) {
      double y = wind_at(profile, z, t);
      if (array.noise_var > 0.0)
        y += sigma_n * normal(rng);
      log.push_back({t, z, y});
    }
  }
  return log;
}

}  // namespace windplan

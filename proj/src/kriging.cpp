#include "windplan/kriging.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace windplan {

TruncationZone TruncationZone::at(double t_s, const ConvectionSpec& conv, double eta, double length_scale_m)
{
  if (!(eta > 0.0))
    throw std::invalid_argument("truncation parameter eta must be positive");
  const double pad = eta * length_scale_m;
  const double speed = std::abs(conv.speed_mps);
  return {speed * t_s - pad, conv.operating_length_m + speed * conv.horizon_s + pad};
}

ObservationSet correct_locations(const MeasurementLog& log, const ConvectionSpec& conv, double noise_var)
{
  ObservationSet obs;
  obs.noise_var = noise_var;
  obs.locations_m.resize(Eigen::Index(log.size()));
  obs.values_mps.resize(Eigen::Index(log.size()));
  for (std::size_t i = 0; i < log.size(); ++i) {
    obs.locations_m(Eigen::Index(i)) = conv.to_wind_frame(log[i].z_m, log[i].t_s);
    obs.values_mps(Eigen::Index(i)) = log[i].y_mps;
  }
  return obs;
}

ObservationSet truncate(const ObservationSet& obs, double t_s, const ConvectionSpec& conv, double eta,
                        double length_scale_m)
{
  const TruncationZone zone = TruncationZone::at(t_s, conv, eta, length_scale_m);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < obs.size(); ++i)
    if (zone.contains(obs.locations_m(i)))
      keep.push_back(i);

  ObservationSet out;
  out.noise_var = obs.noise_var;
  out.locations_m = obs.locations_m(keep);
  out.values_mps = obs.values_mps(keep);
  return out;
}

WindEstimate::WindEstimate(Eigen::VectorXd grid, Eigen::VectorXd mean, Eigen::MatrixXd covariance,
                           GpHyperparams hyper, ConvectionSpec conv, bool prior_fallback)
    : grid_(std::move(grid)), mean_(std::move(mean)), cov_(std::move(covariance)), hyper_(hyper), conv_(conv),
      prior_fallback_(prior_fallback)
{
  if (grid_.size() < 2 || mean_.size() != grid_.size())
    throw std::invalid_argument("estimate grid and mean must match and hold at least two points");
}

double WindEstimate::query_inertial(double north_m, double t_s) const
{
  return uniform_grid().interpolate(mean_, conv_.to_wind_frame(north_m, t_s)).first;
}

WindSample WindEstimate::sample_inertial(double north_m, double t_s) const
{
  auto [v, slope] = uniform_grid().interpolate(mean_, conv_.to_wind_frame(north_m, t_s));
  return {v, slope, -conv_.speed_mps * slope};
}

double WindEstimate::variance_inertial(double north_m, double t_s) const
{
  if (cov_.size() == 0)
    throw std::logic_error("estimate carries no covariance");
  const Eigen::VectorXd diag = cov_.diagonal();
  return uniform_grid().interpolate(diag, conv_.to_wind_frame(north_m, t_s)).first;
}

namespace {

void reject_noiseless_duplicates(const ObservationSet& obs)
{
  if (obs.noise_var > 0.0)
    return;
  std::vector<Eigen::Index> order(std::size_t(obs.size()));
  for (Eigen::Index i = 0; i < obs.size(); ++i)
    order[std::size_t(i)] = i;
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return obs.locations_m(a) < obs.locations_m(b); });
  for (std::size_t k = 1; k < order.size(); ++k) {
    const Eigen::Index a = order[k - 1], b = order[k];
    if (obs.locations_m(a) == obs.locations_m(b)) {
      std::ostringstream msg;
      msg << "singular Kriging system: observations " << std::min(a, b) << " and " << std::max(a, b)
          << " share location beta = " << obs.locations_m(a) << " m with zero noise variance";
      throw std::invalid_argument(msg.str());
    }
  }
}

}  // namespace

WindEstimate fit(const ObservationSet& obs, const Eigen::VectorXd& grid, const GpHyperparams& hyper,
                 const ConvectionSpec& conv)
{
  hyper.validate();
  if (grid.size() < 2)
    throw std::invalid_argument("estimate grid needs at least two points");
  if (obs.locations_m.size() != obs.values_mps.size())
    throw std::invalid_argument("observation locations and values differ in length");

  const double var = hyper.variance();
  Eigen::MatrixXd kgg = kernel_matrix(grid, grid, hyper);
  if (obs.size() == 0)
    return {grid, Eigen::VectorXd::Zero(grid.size()), std::move(kgg), hyper, conv, true};

  const Eigen::Index m = obs.size();
  if (var == 0.0) {
    // Constant process: the unbiased weights are uniform whatever the noise.
    const double mean_var = obs.noise_var / double(m);
    return {grid, Eigen::VectorXd::Constant(grid.size(), obs.values_mps.mean()),
            Eigen::MatrixXd::Constant(grid.size(), grid.size(), mean_var), hyper, conv, false};
  }
  reject_noiseless_duplicates(obs);

  Eigen::MatrixXd a(m + 1, m + 1);
  a.topLeftCorner(m, m) = kernel_matrix(obs.locations_m, obs.locations_m, hyper);
  a.topLeftCorner(m, m).diagonal().array() += obs.noise_var;
  a.col(m).head(m).setOnes();
  a.row(m).head(m).setOnes();
  a(m, m) = 0.0;

  Eigen::MatrixXd b(grid.size(), m + 1);
  b.leftCols(m) = kernel_matrix(grid, obs.locations_m, hyper);
  b.col(m).setOnes();

  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  const double pivot_floor = 1e-13 * std::max(var + obs.noise_var, 1.0);
  if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array().abs() < pivot_floor).any())
    throw std::invalid_argument("singular augmented Kriging system");

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
  rhs.head(m) = obs.values_mps;
  const Eigen::VectorXd mean = b * ldlt.solve(rhs);

  const Eigen::MatrixXd x = ldlt.solve(b.transpose());
  Eigen::MatrixXd cov = kgg;
  cov.noalias() -= b * x;
  cov = 0.5 * (cov + cov.transpose()).eval();

  const double tol = 1e-8 * std::max(var, 1e-300);
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    if (cov(i, i) < -tol)
      throw std::runtime_error("posterior variance significantly negative at grid point " + std::to_string(i));
    cov(i, i) = std::max(cov(i, i), 0.0);
  }
  return {grid, mean, std::move(cov), hyper, conv, false};
}

WindFunction as_wind_function(const WindEstimate& estimate, SpanPolicy policy)
{
  const UniformGrid grid(estimate.grid()(0), estimate.grid()(estimate.grid().size() - 1), estimate.grid().size());
  return WindFunction([grid, mean = estimate.mean(), c = estimate.convection().speed_mps,
                       s = estimate.convection().flow_direction(), policy](double north_m, double t_s) {
    double beta = north_m - c * t_s;
    if (policy == SpanPolicy::Clamp && (beta < grid.lo() || beta > grid.hi())) {
      beta = std::clamp(beta, grid.lo(), grid.hi());
      return WindSample{s * grid.interpolate(mean, beta).first, 0.0, 0.0};
    }
    auto [v, slope] = grid.interpolate(mean, beta);
    return WindSample{s * v, s * slope, -c * s * slope};
  });
}

}  // namespace windplan

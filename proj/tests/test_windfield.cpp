#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "windplan/windfield.hpp"

using namespace windplan;

namespace {

WindProfile bump_profile()
{
  WindProfile p;
  p.convection = ConvectionSpec{-1.0, 40.0, 30.0};
  p.hyper = GpHyperparams{1.5, 1.0, 0.0};
  p.grid = UniformGrid(0.0, 70.0, 141).points();
  p.values = Eigen::VectorXd::Zero(141);
  p.values(40) = 1.0;  // beta = 20
  return p;
}

}  // namespace

TEST_CASE("kernel values")
{
  const GpHyperparams h{3.0, 2.0, 4.0};
  CHECK(kernel(0.0, h) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(kernel(3.0, h) == doctest::Approx(4.0 * std::exp(-0.5)).epsilon(1e-15));
  CHECK(kernel(-3.0, h) == kernel(3.0, h));
  const Eigen::VectorXd a = Eigen::Vector3d(0.0, 1.0, 2.5);
  const Eigen::MatrixXd k = kernel_matrix(a, a, h);
  CHECK((k - k.transpose()).norm() == 0.0);
  CHECK(k(0, 2) == doctest::Approx(4.0 * std::exp(-2.5 * 2.5 / 18.0)).epsilon(1e-15));
}

TEST_CASE("uniform grid")
{
  const UniformGrid g(0.0, 70.0, 2000);
  CHECK(g[0] == 0.0);
  CHECK(g[1999] == 70.0);
  CHECK(g.spacing() == doctest::Approx(70.0 / 1999.0));
  CHECK(g.locate(70.0) == 1998);
  CHECK_THROWS_AS(g.locate(-1e-9), OutOfSpanError);
  CHECK_THROWS_AS(g.locate(70.0 + 1e-9), OutOfSpanError);

  Eigen::VectorXd line = 2.0 * g.points().array() - 3.0;
  for (double x : {0.0, 0.01, 12.345, 69.99, 70.0}) {
    const auto [v, slope] = g.interpolate(line, x);
    CHECK(v == doctest::Approx(2.0 * x - 3.0).epsilon(1e-13));
    CHECK(slope == doctest::Approx(2.0).epsilon(1e-9));
  }
  CHECK_THROWS_AS(UniformGrid(0.0, 0.0, 5), std::invalid_argument);
}

TEST_CASE("profile sampling")
{
  const GpHyperparams h{3.0, 1.0, 4.0};
  const ConvectionSpec c{-1.0, 40.0, 30.0};
  const WindProfile a = sample_profile(h, c, 500, 7);
  CHECK(a.grid.size() == 500);
  CHECK(a.grid(0) == 0.0);
  CHECK(a.grid(499) == doctest::Approx(70.0));
  CHECK(a.values == sample_profile(h, c, 500, 7).values);
  CHECK(a.values != sample_profile(h, c, 500, 8).values);

  const WindProfile flat = sample_profile(GpHyperparams{3.0, 0.0, 5.5}, c, 50, 1);
  CHECK((flat.values.array() == 5.5).all());

  CHECK_THROWS_AS(sample_profile(GpHyperparams{-1.0, 1.0, 0.0}, c, 50, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_profile(h, c, 1, 1), std::invalid_argument);
}

TEST_CASE("profile sampling statistics match the kernel")
{
  // Coarse grid so draws are cheap; empirical moments over many seeds.
  const GpHyperparams h{20.0, 1.5, 4.0};
  const ConvectionSpec c{-1.0, 40.0, 30.0};
  const int n = 4000;
  const Eigen::Index g = 5;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(g);
  Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(g, g);
  Eigen::VectorXd grid;
  for (int s = 0; s < n; ++s) {
    const WindProfile p = sample_profile(h, c, g, std::uint64_t(s));
    grid = p.grid;
    sum += p.values;
    const Eigen::VectorXd d = p.values.array() - 4.0;
    outer += d * d.transpose();
  }
  const Eigen::VectorXd mean = sum / n;
  const Eigen::MatrixXd cov = outer / n;
  const double var = h.variance();
  for (Eigen::Index i = 0; i < g; ++i) {
    CHECK(std::abs(mean(i) - 4.0) < 5.0 * std::sqrt(var / n));
    for (Eigen::Index j = 0; j < g; ++j) {
      const double expected = var * std::exp(-std::pow(grid(i) - grid(j), 2) / (2.0 * 400.0));
      CHECK(std::abs(cov(i, j) - expected) < 6.0 * var * std::sqrt(2.0 / n));
    }
  }
}

TEST_CASE("convected bump")
{
  const WindProfile p = bump_profile();
  CHECK(wind_at(p, 20.0, 0.0) == 1.0);
  CHECK(wind_at(p, 15.0, 5.0) == 1.0);
  CHECK(wind_at(p, 20.0, 5.0) == 0.0);
  CHECK_THROWS_AS(wind_at(p, -0.5, 0.0), OutOfSpanError);
  CHECK_THROWS_AS(wind_at(p, 45.0, 30.0), OutOfSpanError);
}

TEST_CASE("frozen field translates at the convection speed")
{
  const WindProfile p = sample_profile(GpHyperparams{1.5, 1.5, 8.0}, ConvectionSpec{-1.0, 40.0, 30.0}, 2000, 3);
  std::mt19937_64 rng(11);
  // Dyadic queries so the shifted coordinates are exact.
  std::uniform_int_distribution<int> north(0, 40 * 1024), span(0, 15 * 1024);
  const double c = p.convection.speed_mps;
  for (int i = 0; i < 200; ++i) {
    const double pn = north(rng) / 1024.0, t = span(rng) / 1024.0, d = span(rng) / 1024.0;
    CHECK(wind_at(p, pn, t) == wind_at(p, pn + c * d, t + d));
  }
}

TEST_CASE("vehicle-frame wind carries the flow direction")
{
  const WindProfile p = sample_profile(GpHyperparams{1.5, 1.5, 8.0}, ConvectionSpec{-1.0, 40.0, 30.0}, 2000, 4);
  CHECK(p.convection.flow_direction() == -1.0);
  CHECK(ConvectionSpec{2.0, 40.0, 30.0}.flow_direction() == 1.0);
  const WindFunction f = as_wind_function(p);
  for (double pn : {5.0, 12.3, 30.0}) {
    const WindSample s = f.sample(pn, 6.0);
    CHECK(s.value == -wind_at(p, pn, 6.0));
    // Partials against central differences inside one interpolation cell.
    const double h = 1e-6;
    CHECK(s.d_time == doctest::Approx(-p.convection.speed_mps * s.d_north));
    CHECK(s.d_north == doctest::Approx((f(pn + h, 6.0) - f(pn - h, 6.0)) / (2 * h)).epsilon(1e-4));
  }
}

TEST_CASE("anemometer sampling")
{
  WindProfile p = bump_profile();
  p.values.setLinSpaced(141, 2.0, 9.0);
  AnemometerArray array{{10.0, 17.5, 25.0}, 10.0, 0.0, 5.0};
  const MeasurementLog log = run_sensors(p, array, 1);
  REQUIRE(log.size() == 150);
  CHECK(log[0].t_s == doctest::Approx(0.1));
  CHECK(log[0].z_m == 10.0);
  CHECK(log[2].z_m == 25.0);
  CHECK(log.back().t_s == doctest::Approx(5.0));
  for (const Measurement& m : log)
    CHECK(m.y_mps == wind_at(p, m.z_m, m.t_s));

  // Noise residuals have the configured variance.
  WindProfile flat = p;
  flat.values.setConstant(3.0);
  array.noise_var = 0.6;
  array.sample_rate_hz = 200.0;
  array.sampling_end_s = 10.0;
  const MeasurementLog noisy = run_sensors(flat, array, 9);
  double sum = 0.0, sq = 0.0;
  for (const Measurement& m : noisy) {
    sum += m.y_mps - 3.0;
    sq += (m.y_mps - 3.0) * (m.y_mps - 3.0);
  }
  const double n = double(noisy.size());
  CHECK(std::abs(sum / n) < 5.0 * std::sqrt(0.6 / n));
  CHECK(sq / n == doctest::Approx(0.6).epsilon(0.05));
  CHECK(run_sensors(flat, array, 9)[17].y_mps == noisy[17].y_mps);

  array.positions_m = {45.0};
  CHECK_THROWS_AS(run_sensors(p, array, 1), std::invalid_argument);
  array.positions_m.clear();
  CHECK_THROWS_AS(run_sensors(p, array, 1), std::invalid_argument);
}

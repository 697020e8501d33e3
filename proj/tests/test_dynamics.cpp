#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "reference_eom.hpp"
#include "windplan/dynamics.hpp"

using namespace windplan;

namespace {

const VehicleParams kVehicle;

ControlSchedule hold(double front, double rear)
{
  return [u = ControlInput(front, rear)](double) { return u; };
}

ControlSchedule smooth_control()
{
  return [](double t) { return ControlInput(18.0 + 0.4 * std::sin(2.0 * t), 18.0 + 0.3 * std::cos(3.0 * t)); };
}

WindFunction smooth_wind()
{
  return WindFunction([](double pn, double t) {
    const double a = 0.3 * pn + 0.7 * t;
    return WindSample{-4.0 + std::sin(a), 0.3 * std::cos(a), 0.7 * std::cos(a)};
  });
}

QuadState moving_state()
{
  QuadState x;
  x << 5.0, -1.0, -0.2, 3.0, 2.0, 0.1;
  return x;
}

}  // namespace

TEST_CASE("hover is an equilibrium")
{
  const double half = kVehicle.hover_thrust();
  CHECK(half == doctest::Approx(0.5 * 3.696 * 9.81));
  const QuadState dx = eom(QuadState::Zero().eval(), ControlInput(half, half), WindFunction::constant(0.0), 0.0, kVehicle);
  CHECK(dx.norm() < 1e-12);
}

TEST_CASE("pitch torque")
{
  const QuadState dx = eom(QuadState::Zero().eval(), ControlInput(20.0, 10.0), WindFunction::constant(0.0), 0.0, kVehicle);
  CHECK(dx(kPitchRate) == doctest::Approx(10.0 * 0.254 / 0.0292).epsilon(1e-14));
  CHECK(dx(kPitchRate) == doctest::Approx(86.99).epsilon(1e-4));
}

TEST_CASE("vector field matches an independent evaluation")
{
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pos(-50.0, 50.0), ang(-1.0, 1.0), vel(-20.0, 20.0), rate(-10.0, 10.0),
      thrust(0.0, 41.6964), wind(-15.0, 15.0);
  for (int i = 0; i < 1000; ++i) {
    QuadState x;
    x << pos(rng), pos(rng), ang(rng), vel(rng), vel(rng), rate(rng);
    const double tf = thrust(rng), tr = thrust(rng), w = wind(rng);
    const QuadState dx = eom(x, ControlInput(tf, tr), WindFunction::constant(w), 0.0, kVehicle);
    const auto ref = reference::eom({x(0), x(1), x(2), x(3), x(4), x(5)}, tf, tr, w);
    for (int k = 0; k < kStateDim; ++k)
      CHECK(std::abs(dx(k) - ref[std::size_t(k)]) <= 1e-12 * std::max(1.0, std::abs(ref[std::size_t(k)])));
  }
}

TEST_CASE("wind enters only the north rate")
{
  const QuadState x = moving_state();
  const ControlInput u(15.0, 22.0);
  const QuadState a = eom(x, u, WindFunction::constant(0.0), 0.0, kVehicle);
  const QuadState b = eom(x, u, WindFunction::constant(7.25), 0.0, kVehicle);
  CHECK(b(kNorth) - a(kNorth) == doctest::Approx(7.25).epsilon(1e-14));
  for (int k = 1; k < kStateDim; ++k)
    CHECK(a(k) == b(k));
}

TEST_CASE("drag is odd in the flow-relative velocity")
{
  for (double v : {0.0, 0.1, 3.0, 25.0}) {
    QuadState x = QuadState::Zero();
    x(kSurge) = v;
    x(kHeave) = 2.0 * v;
    const Eigen::Vector2d plus = drag_forces<double>(x, kVehicle);
    x = -x;
    const Eigen::Vector2d minus = drag_forces<double>(x, kVehicle);
    CHECK(plus(0) == -minus(0));
    CHECK(plus(1) == -minus(1));
    CHECK(plus(0) <= 0.0);
    CHECK(plus(1) <= 0.0);
  }
  CHECK(drag_forces<double>(QuadState::Zero().eval(), kVehicle).norm() == 0.0);
  CHECK(signed_square(-3.0) == -9.0);
}

TEST_CASE("free fall approaches terminal velocity")
{
  const double vt = std::sqrt(2.0 * 3.696 * 9.81 / (1.293 * 0.4 * 0.109));
  CHECK(vt == doctest::Approx(35.865).epsilon(1e-4));
  QuadState at = QuadState::Zero();
  at(kHeave) = vt;
  CHECK(std::abs(eom(at, ControlInput(0.0, 0.0), WindFunction::constant(0.0), 0.0, kVehicle)(kHeave)) < 1e-12);

  const std::vector<double> times{1.0, 5.0, 20.0};
  const SampledTrajectory tr =
      integrate(QuadState::Zero().eval(), hold(0.0, 0.0), WindFunction::constant(0.0), 0.0, 20.0, kVehicle, times);
  REQUIRE(tr.states.size() == 3);
  CHECK(tr.states[0](kHeave) < tr.states[1](kHeave));
  CHECK(tr.states[2](kHeave) == doctest::Approx(vt).epsilon(1e-3));
  CHECK(tr.states[2](kHeave) < vt);
}

TEST_CASE("hover held for ten seconds")
{
  const double half = kVehicle.hover_thrust();
  const SampledTrajectory tr =
      integrate(QuadState::Zero().eval(), hold(half, half), WindFunction::constant(0.0), 0.0, 10.0, kVehicle);
  REQUIRE(tr.times.back() == 10.0);
  CHECK(tr.states.back().norm() < 1e-9);
}

TEST_CASE("output times and breakpoints")
{
  const std::vector<double> out{0.5, 1.0, 1.5};
  const std::vector<double> knots{0.25, 0.75, 1.25};
  const SampledTrajectory tr =
      integrate(moving_state(), smooth_control(), smooth_wind(), 0.0, 2.0, kVehicle, out, knots);
  REQUIRE(tr.times.size() == 4);
  CHECK(tr.times[0] == 0.5);
  CHECK(tr.times[3] == 2.0);
  const SampledTrajectory plain = integrate(moving_state(), smooth_control(), smooth_wind(), 0.0, 2.0, kVehicle);
  CHECK((plain.states.back() - tr.states.back()).norm() < 1e-7);
}

TEST_CASE("tightening the tolerance moves the result by less than the coarse tolerance")
{
  const QuadState coarse = integrate(moving_state(), smooth_control(), smooth_wind(), 0.0, 2.0, kVehicle, {}, {},
                                     IntegratorTolerance{1e-6, 1e-6})
                               .states.back();
  const QuadState fine = integrate(moving_state(), smooth_control(), smooth_wind(), 0.0, 2.0, kVehicle, {}, {},
                                   IntegratorTolerance{5e-7, 5e-7})
                             .states.back();
  const QuadState ref = integrate(moving_state(), smooth_control(), smooth_wind(), 0.0, 2.0, kVehicle, {}, {},
                                  IntegratorTolerance{1e-12, 1e-12})
                            .states.back();
  CHECK((coarse - fine).lpNorm<Eigen::Infinity>() < 1e-6 * std::max(1.0, ref.lpNorm<Eigen::Infinity>()) * 10.0);
  CHECK((fine - ref).norm() <= (coarse - ref).norm() * 1.5);
}

TEST_CASE("fixed-step RK4 converges at fourth order")
{
  const QuadState ref = integrate(moving_state(), smooth_control(), smooth_wind(), 0.0, 2.0, kVehicle, {}, {},
                                  IntegratorTolerance{1e-13, 1e-13})
                            .states.back();
  std::vector<double> log_h, log_e;
  for (int steps : {10, 20, 40, 80}) {
    const QuadState x = integrate_rk4(moving_state(), smooth_control(), smooth_wind(), 0.0, 2.0, steps, kVehicle);
    log_h.push_back(std::log(2.0 / steps));
    log_e.push_back(std::log((x - ref).norm()));
  }
  const double n = double(log_h.size());
  double sh = 0, se = 0, shh = 0, she = 0;
  for (std::size_t i = 0; i < log_h.size(); ++i) {
    sh += log_h[i];
    se += log_e[i];
    shh += log_h[i] * log_h[i];
    she += log_h[i] * log_e[i];
  }
  const double slope = (n * she - sh * se) / (n * shh - sh * sh);
  CHECK(slope == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("vehicle parameter validation")
{
  VehicleParams p;
  CHECK_NOTHROW(p.validate());
  p.mass_kg = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

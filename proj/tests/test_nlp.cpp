#include <doctest.h>

#include <cmath>
#include <functional>

#include "hessian_jet.hpp"
#include "windplan/nlp.hpp"

using namespace windplan;

namespace {

template <typename T>
T jet_test_function(const T& x, const T& y, const T& z)
{
  using std::cos;
  using std::sin;
  using std::sqrt;
  return sin(x * y) + cos(z) * x / (1.0 + y * y) + sqrt(2.0 + x * x + z) * 3.0 - z * z * y;
}

/// Small dense problem with analytic derivatives supplied as callables.
class DenseProblem : public NlpProblem
{
public:
  using Fn = std::function<double(const Eigen::VectorXd&)>;
  using VecFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
  using MatFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;
  using HessFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

  DenseProblem(Eigen::VectorXd lo, Eigen::VectorXd hi, Eigen::Index m, Fn f, VecFn g, VecFn c, MatFn j, HessFn h)
      : lo_(std::move(lo)), hi_(std::move(hi)), m_(m), f_(f), g_(g), c_(c), j_(j), h_(h)
  {}

  Eigen::Index num_variables() const override { return lo_.size(); }
  Eigen::Index num_constraints() const override { return m_; }
  const Eigen::VectorXd& lower() const override { return lo_; }
  const Eigen::VectorXd& upper() const override { return hi_; }
  double objective(const Eigen::VectorXd& z) const override { return f_(z); }
  Eigen::VectorXd objective_gradient(const Eigen::VectorXd& z) const override { return g_(z); }
  Eigen::VectorXd constraints(const Eigen::VectorXd& z) const override { return c_(z); }
  SparseMatrix constraint_jacobian(const Eigen::VectorXd& z) const override { return j_(z).sparseView(); }
  SparseMatrix lagrangian_hessian(const Eigen::VectorXd& z, const Eigen::VectorXd& w) const override
  {
    Eigen::MatrixXd h = h_(z, w);
    for (Eigen::Index i = 0; i < h.rows(); ++i)
      h(i, i) += 0.0;
    return h.sparseView(0.0, 0.0);
  }

private:
  Eigen::VectorXd lo_, hi_;
  Eigen::Index m_;
  Fn f_;
  VecFn g_, c_;
  MatFn j_;
  HessFn h_;
};

constexpr double kInf = 1e20;

}  // namespace

TEST_CASE("HessianJet matches finite differences")
{
  using Jet = HessianJet<3>;
  const double p[3] = {0.7, -0.4, 1.3};
  const Jet r = jet_test_function(Jet::variable(p[0], 0), Jet::variable(p[1], 1), Jet::variable(p[2], 2));
  auto f = [](double x, double y, double z) { return jet_test_function(x, y, z); };
  CHECK(r.v == doctest::Approx(f(p[0], p[1], p[2])).epsilon(1e-15));

  const double h = 1e-4;
  for (int i = 0; i < 3; ++i) {
    double a[3] = {p[0], p[1], p[2]}, b[3] = {p[0], p[1], p[2]};
    a[i] += h;
    b[i] -= h;
    CHECK(r.g[std::size_t(i)] == doctest::Approx((f(a[0], a[1], a[2]) - f(b[0], b[1], b[2])) / (2 * h)).epsilon(1e-7));
    for (int j = 0; j < 3; ++j) {
      double pp[3] = {p[0], p[1], p[2]}, pm[3] = {p[0], p[1], p[2]}, mp[3] = {p[0], p[1], p[2]},
             mm[3] = {p[0], p[1], p[2]};
      pp[i] += h; pp[j] += h;
      pm[i] += h; pm[j] -= h;
      mp[i] -= h; mp[j] += h;
      mm[i] -= h; mm[j] -= h;
      const double fd = (f(pp[0], pp[1], pp[2]) - f(pm[0], pm[1], pm[2]) - f(mp[0], mp[1], mp[2]) +
                         f(mm[0], mm[1], mm[2])) /
                        (4 * h * h);
      CHECK(r.hessian(i, j) == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("projected gradient norm")
{
  const Eigen::Vector2d z(0.0, 0.5), lo(0.0, 0.0), hi(1.0, 1.0);
  CHECK(projected_gradient_norm(z, Eigen::Vector2d(2.0, 0.0), lo, hi) == 0.0);
  CHECK(projected_gradient_norm(z, Eigen::Vector2d(-2.0, 0.1), lo, hi) == doctest::Approx(1.0));
}

TEST_CASE("equality-constrained quadratic on a circle")
{
  // min x + y  s.t.  x^2 + y^2 = 2  ->  (-1, -1)
  DenseProblem p(
      Eigen::Vector2d(-kInf, -kInf), Eigen::Vector2d(kInf, kInf), 1,
      [](const Eigen::VectorXd& z) { return z(0) + z(1); },
      [](const Eigen::VectorXd&) { return Eigen::VectorXd(Eigen::Vector2d(1.0, 1.0)); },
      [](const Eigen::VectorXd& z) { return Eigen::VectorXd::Constant(1, z.squaredNorm() - 2.0); },
      [](const Eigen::VectorXd& z) { return Eigen::MatrixXd(2.0 * z.transpose()); },
      [](const Eigen::VectorXd&, const Eigen::VectorXd& w) { return Eigen::MatrixXd(2.0 * w(0) * Eigen::Matrix2d::Identity()); });
  const SolverResult r = solve_augmented_lagrangian(p, Eigen::Vector2d(-0.5, -1.5));
  REQUIRE(r.converged);
  CHECK(r.z(0) == doctest::Approx(-1.0).epsilon(1e-4));
  CHECK(r.z(1) == doctest::Approx(-1.0).epsilon(1e-4));
  CHECK(r.multipliers(0) == doctest::Approx(-0.5).epsilon(1e-3));
}

TEST_CASE("active bound")
{
  // min (x-2)^2 + (y-1)^2  s.t.  x - y = 0,  x <= 1.2  ->  x = y = 1.2
  DenseProblem p(
      Eigen::Vector2d(-kInf, -kInf), Eigen::Vector2d(1.2, kInf), 1,
      [](const Eigen::VectorXd& z) { return std::pow(z(0) - 2.0, 2) + std::pow(z(1) - 1.0, 2); },
      [](const Eigen::VectorXd& z) { return Eigen::VectorXd(Eigen::Vector2d(2 * (z(0) - 2.0), 2 * (z(1) - 1.0))); },
      [](const Eigen::VectorXd& z) { return Eigen::VectorXd::Constant(1, z(0) - z(1)); },
      [](const Eigen::VectorXd&) { return Eigen::MatrixXd(Eigen::RowVector2d(1.0, -1.0)); },
      [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return Eigen::MatrixXd(2.0 * Eigen::Matrix2d::Identity()); });
  const SolverResult r = solve_augmented_lagrangian(p, Eigen::Vector2d(0.0, 0.0));
  REQUIRE(r.converged);
  CHECK(r.z(0) == doctest::Approx(1.2).epsilon(1e-6));
  CHECK(r.z(1) == doctest::Approx(1.2).epsilon(1e-4));
  CHECK(r.z(0) <= 1.2);
}

TEST_CASE("nonconvex objective with fixed variable")
{
  // min -x y z  s.t.  x + 2y + 2z = 72,  0 <= x,y,z <= 42, z fixed at 12
  Eigen::Vector3d lo(0.0, 0.0, 12.0), hi(42.0, 42.0, 12.0);
  DenseProblem p(
      lo, hi, 1, [](const Eigen::VectorXd& z) { return -z(0) * z(1) * z(2); },
      [](const Eigen::VectorXd& z) { return Eigen::VectorXd(Eigen::Vector3d(-z(1) * z(2), -z(0) * z(2), -z(0) * z(1))); },
      [](const Eigen::VectorXd& z) { return Eigen::VectorXd::Constant(1, z(0) + 2 * z(1) + 2 * z(2) - 72.0); },
      [](const Eigen::VectorXd&) { return Eigen::MatrixXd(Eigen::RowVector3d(1.0, 2.0, 2.0)); },
      [](const Eigen::VectorXd& z, const Eigen::VectorXd&) {
        Eigen::Matrix3d h;
        h << 0, -z(2), -z(1), -z(2), 0, -z(0), -z(1), -z(0), 0;
        return Eigen::MatrixXd(h);
      });
  // With z = 12: maximize x y on x + 2y = 48 -> x = 24, y = 12.
  const SolverResult r = solve_augmented_lagrangian(p, Eigen::Vector3d(10.0, 10.0, 12.0));
  REQUIRE(r.converged);
  CHECK(r.z(0) == doctest::Approx(24.0).epsilon(1e-4));
  CHECK(r.z(1) == doctest::Approx(12.0).epsilon(1e-4));
  CHECK(r.z(2) == 12.0);
}

#include "windplan/nlp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/SparseCholesky>

namespace windplan {

double projected_gradient_norm(const Eigen::VectorXd& z, const Eigen::VectorXd& g, const Eigen::VectorXd& lower,
                               const Eigen::VectorXd& upper)
{
  return ((z - g).cwiseMax(lower).cwiseMin(upper) - z).lpNorm<Eigen::Infinity>();
}

namespace {

struct Merit
{
  const NlpProblem& problem;
  Eigen::VectorXd lambda;
  double rho;
  double objective_weight = 1.0;

  double value(const Eigen::VectorXd& z, Eigen::VectorXd* c_out = nullptr) const
  {
    Eigen::VectorXd c = problem.constraints(z);
    const double v = objective_weight * problem.objective(z) - lambda.dot(c) + 0.5 * rho * c.squaredNorm();
    if (c_out)
      *c_out = std::move(c);
    return v;
  }
};

Eigen::VectorXd project(const Eigen::VectorXd& z, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi)
{
  return z.cwiseMax(lo).cwiseMin(hi);
}

/// Least-squares multipliers, argmin |grad f - J^T lambda| over the variables off their bounds.
Eigen::VectorXd multiplier_estimate(const NlpProblem& problem, const Eigen::VectorXd& z, const Eigen::VectorXd& lo,
                                    const Eigen::VectorXd& hi)
{
  const Eigen::Index m = problem.num_constraints();
  if (m == 0)
    return Eigen::VectorXd(0);
  Eigen::VectorXd mask(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double gap = 1e-6 * (1.0 + std::abs(z(i)));
    mask(i) = z(i) - lo(i) > gap && hi(i) - z(i) > gap ? 1.0 : 0.0;
  }
  const SparseMatrix jf = problem.constraint_jacobian(z) * mask.asDiagonal();
  SparseMatrix normal = jf * jf.transpose();
  for (Eigen::Index i = 0; i < m; ++i)
    normal.coeffRef(i, i) += 1e-10;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(normal);
  if (ldlt.info() != Eigen::Success)
    return Eigen::VectorXd::Zero(m);
  const Eigen::VectorXd lambda = ldlt.solve(jf * problem.objective_gradient(z).cwiseProduct(mask));
  return lambda.allFinite() ? lambda : Eigen::VectorXd::Zero(m);
}

/// Shifted Newton solves restricted to a free subset. The lower-triangle pattern
/// and its symbolic factorization persist while the Hessian pattern is unchanged;
/// held rows and columns are zeroed with a unit diagonal.
class ReducedNewton
{
public:
  void reset(const SparseMatrix& hessian)
  {
    SparseMatrix lower = hessian.triangularView<Eigen::Lower>();
    for (Eigen::Index i = 0; i < lower.cols(); ++i)
      lower.coeffRef(i, i) += 0.0;
    lower.makeCompressed();
    const bool same = lower.rows() == work_.rows() && lower.nonZeros() == work_.nonZeros() &&
                      std::equal(lower.outerIndexPtr(), lower.outerIndexPtr() + lower.cols() + 1,
                                 work_.outerIndexPtr()) &&
                      std::equal(lower.innerIndexPtr(), lower.innerIndexPtr() + lower.nonZeros(),
                                 work_.innerIndexPtr());
    base_ = Eigen::Map<const Eigen::VectorXd>(lower.valuePtr(), lower.nonZeros());
    work_ = std::move(lower);
    if (!same) {
      llt_.analyzePattern(work_);
      diagonal_.resize(std::size_t(work_.cols()));
      for (Eigen::Index col = 0; col < work_.cols(); ++col)
        for (Eigen::Index p = work_.outerIndexPtr()[col]; p < work_.outerIndexPtr()[col + 1]; ++p)
          if (work_.innerIndexPtr()[p] == col)
            diagonal_[std::size_t(col)] = p;
    }
  }

  /// Solves (H + diag(extra) + shift D) d = rhs on the free set, D = max(|H_ii|, 1).
  bool solve(const std::vector<char>& free, const Eigen::VectorXd& extra, double shift, const Eigen::VectorXd& rhs,
             Eigen::VectorXd& d)
  {
    double* values = work_.valuePtr();
    for (Eigen::Index col = 0; col < work_.cols(); ++col)
      for (Eigen::Index p = work_.outerIndexPtr()[col]; p < work_.outerIndexPtr()[col + 1]; ++p) {
        const Eigen::Index row = work_.innerIndexPtr()[p];
        values[p] = free[std::size_t(col)] && free[std::size_t(row)] ? base_(p) : 0.0;
      }
    Eigen::VectorXd b = Eigen::VectorXd::Zero(rhs.size());
    for (Eigen::Index i = 0; i < work_.cols(); ++i) {
      const Eigen::Index p = diagonal_[std::size_t(i)];
      if (free[std::size_t(i)]) {
        values[p] = base_(p) + extra(i) + shift * std::max(std::abs(base_(p)), 1.0);
        b(i) = rhs(i);
      } else {
        values[p] = 1.0;
      }
    }
    llt_.factorize(work_);
    if (llt_.info() != Eigen::Success)
      return false;
    d = llt_.solve(b);
    return d.allFinite();
  }

private:
  SparseMatrix work_;
  Eigen::VectorXd base_;
  std::vector<Eigen::Index> diagonal_;
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower> llt_;
};

/// Bound multipliers and barrier parameter, carried from one inner solve to the next.
struct BarrierState
{
  Eigen::VectorXd v_lo;
  Eigen::VectorXd v_hi;
  double mu = 0.1;
  double shift = 0.0;
};

struct InnerStats
{
  int iterations = 0;
  double projected_gradient = 0.0;
};

/// Largest step in (0, 1] keeping x + a dx at least a (1 - tau) fraction away from zero.
double fraction_to_boundary(const Eigen::VectorXd& x, const Eigen::VectorXd& dx, double tau)
{
  double a = 1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (dx(i) < 0.0)
      a = std::min(a, -tau * x(i) / dx(i));
  return a;
}

/**
 * Primal-dual log-barrier Newton on the merit over the box [lower, upper].
 *
 * Fixed variables stay put. The barrier parameter falls superlinearly once the
 * barrier subproblem is solved to 10 mu, and the loop stops when the projected
 * gradient of the merit is below `tolerance`.
 */
InnerStats minimize_merit(const Merit& merit, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, Eigen::VectorXd& z,
                          double tolerance, int max_iterations, BarrierState& state)
{
  const NlpProblem& problem = merit.problem;
  const Eigen::Index n = z.size();
  const double mu_min = std::max(0.1 * tolerance * tolerance, 1e-14);

  std::vector<char> free(std::size_t(n), 0);
  Eigen::VectorXd has_lo = Eigen::VectorXd::Zero(n), has_hi = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (lo(i) == hi(i)) {
      z(i) = lo(i);
      continue;
    }
    free[std::size_t(i)] = 1;
    has_lo(i) = std::isfinite(lo(i)) ? 1.0 : 0.0;
    has_hi(i) = std::isfinite(hi(i)) ? 1.0 : 0.0;
    const double push = std::min(1e-2, std::max(state.mu, 1e-10));
    const double room = 0.5 * (hi(i) - lo(i));
    if (has_lo(i) > 0.0)
      z(i) = std::max(z(i), lo(i) + std::min(push * std::max(1.0, std::abs(lo(i))), room));
    if (has_hi(i) > 0.0)
      z(i) = std::min(z(i), hi(i) - std::min(push * std::max(1.0, std::abs(hi(i))), room));
  }
  auto slack_lo = [&](const Eigen::VectorXd& x) {
    return Eigen::VectorXd((x - lo).cwiseProduct(has_lo) + (Eigen::VectorXd::Ones(n) - has_lo));
  };
  auto slack_hi = [&](const Eigen::VectorXd& x) {
    return Eigen::VectorXd((hi - x).cwiseProduct(has_hi) + (Eigen::VectorXd::Ones(n) - has_hi));
  };
  if (state.v_lo.size() != n) {
    state.v_lo = (state.mu * slack_lo(z).cwiseInverse()).cwiseProduct(has_lo);
    state.v_hi = (state.mu * slack_hi(z).cwiseInverse()).cwiseProduct(has_hi);
  }
  Eigen::VectorXd& v_lo = state.v_lo;
  Eigen::VectorXd& v_hi = state.v_hi;
  double& mu = state.mu;

  auto barrier = [&](const Eigen::VectorXd& x, double m) {
    const Eigen::VectorXd sl = slack_lo(x), su = slack_hi(x);
    double b = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (has_lo(i) > 0.0)
        b -= m * std::log(sl(i));
      if (has_hi(i) > 0.0)
        b -= m * std::log(su(i));
    }
    return b;
  };

  InnerStats stats;
  ReducedNewton newton;
  Eigen::VectorXd c;
  double value = merit.value(z, &c);

  for (; stats.iterations < max_iterations; ++stats.iterations) {
    const SparseMatrix jac = problem.constraint_jacobian(z);
    const Eigen::VectorXd w = merit.rho * c - merit.lambda;
    const Eigen::VectorXd g = merit.objective_weight * problem.objective_gradient(z) + jac.transpose() * w;
    stats.projected_gradient = projected_gradient_norm(z, g, lo, hi);
    if (stats.projected_gradient <= tolerance)
      break;

    const Eigen::VectorXd sl = slack_lo(z), su = slack_hi(z);
    auto barrier_error = [&](double m) {
      double e = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!free[std::size_t(i)])
          continue;
        e = std::max(e, std::abs(g(i) - v_lo(i) + v_hi(i)));
        if (has_lo(i) > 0.0)
          e = std::max(e, std::abs(sl(i) * v_lo(i) - m));
        if (has_hi(i) > 0.0)
          e = std::max(e, std::abs(su(i) * v_hi(i) - m));
      }
      return e;
    };
    while (mu > mu_min && barrier_error(mu) <= 10.0 * mu)
      mu = std::max(mu_min, std::min(0.2 * mu, std::pow(mu, 1.5)));

    SparseMatrix hess = problem.lagrangian_hessian(z, w);
    hess += merit.rho * SparseMatrix(jac.transpose() * jac);
    newton.reset(hess);

    const Eigen::VectorXd sigma =
        v_lo.cwiseQuotient(sl).cwiseProduct(has_lo) + v_hi.cwiseQuotient(su).cwiseProduct(has_hi);
    const Eigen::VectorXd barrier_grad =
        g - (mu * sl.cwiseInverse()).cwiseProduct(has_lo) + (mu * su.cwiseInverse()).cwiseProduct(has_hi);
    const double phi = value + barrier(z, mu);
    const double tau = std::max(0.99, 1.0 - mu);

    bool accepted = false;
    state.shift = state.shift < 1e-10 ? 0.0 : 0.25 * state.shift;
    for (int attempt = 0; attempt < 12 && !accepted; ++attempt) {
      Eigen::VectorXd dz;
      if (!newton.solve(free, sigma, state.shift, -barrier_grad, dz) || !(barrier_grad.dot(dz) < 0.0)) {
        state.shift = std::max(1e-8, 8.0 * state.shift);
        continue;
      }
      for (Eigen::Index i = 0; i < n; ++i)
        if (!free[std::size_t(i)])
          dz(i) = 0.0;
      double alpha = std::min(fraction_to_boundary(sl, Eigen::VectorXd(dz.cwiseProduct(has_lo)), tau),
                              fraction_to_boundary(su, Eigen::VectorXd(-dz.cwiseProduct(has_hi)), tau));
      const double slope = barrier_grad.dot(dz);
      for (int ls = 0; ls < 40; ++ls, alpha *= 0.5) {
        const Eigen::VectorXd trial = z + alpha * dz;
        Eigen::VectorXd c_trial;
        const double v = merit.value(trial, &c_trial);
        const double phi_trial = v + barrier(trial, mu);
        if (std::isfinite(phi_trial) && phi_trial <= phi + 1e-4 * alpha * slope) {
          const Eigen::VectorXd dv_lo =
              ((mu * sl.cwiseInverse()) - v_lo - v_lo.cwiseQuotient(sl).cwiseProduct(dz)).cwiseProduct(has_lo);
          const Eigen::VectorXd dv_hi =
              ((mu * su.cwiseInverse()) - v_hi + v_hi.cwiseQuotient(su).cwiseProduct(dz)).cwiseProduct(has_hi);
          const double alpha_v = std::min(fraction_to_boundary(v_lo, dv_lo, tau), fraction_to_boundary(v_hi, dv_hi, tau));
          v_lo += alpha_v * dv_lo;
          v_hi += alpha_v * dv_hi;
          z = trial;
          c = std::move(c_trial);
          value = v;
          accepted = true;
          break;
        }
      }
      if (!accepted)
        state.shift = std::max(1e-8, 8.0 * state.shift);
    }
    if (!accepted)
      break;

    // Keep the bound multipliers within a factor of the primal-dual centre.
    const Eigen::VectorXd nsl = slack_lo(z), nsu = slack_hi(z);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (has_lo(i) > 0.0)
        v_lo(i) = std::clamp(v_lo(i), mu / (1e10 * nsl(i)), 1e10 * mu / nsl(i));
      if (has_hi(i) > 0.0)
        v_hi(i) = std::clamp(v_hi(i), mu / (1e10 * nsu(i)), 1e10 * mu / nsu(i));
    }
  }
  return stats;
}

}  // namespace

SolverResult solve_augmented_lagrangian(const NlpProblem& problem, const Eigen::VectorXd& z0,
                                        const SolverOptions& options)
{
  const Eigen::VectorXd& lo = problem.lower();
  const Eigen::VectorXd& hi = problem.upper();

  Merit merit{problem, Eigen::VectorXd::Zero(problem.num_constraints()), options.initial_penalty};
  Eigen::VectorXd z = project(z0, lo, hi);

  double omega = 1.0 / merit.rho;
  double eta = 1.0 / std::pow(merit.rho, 0.1);

  SolverResult best;
  SolverResult result;

  int total = 0;
  BarrierState barrier;
  {
    // Feasibility phase: constraint violation alone, with the listed variables held.
    Eigen::VectorXd held_lo = lo, held_hi = hi;
    for (const Eigen::Index i : options.feasibility_hold)
      held_lo(i) = held_hi(i) = z(i);
    const Merit feasibility{problem, merit.lambda, 1.0, 0.0};
    total += minimize_merit(feasibility, held_lo, held_hi, z, 1e-10,
                            std::min(options.max_inner_iterations, options.max_total_iterations), barrier)
                 .iterations;
    barrier.v_lo.resize(0);
    barrier.v_hi.resize(0);
    barrier.mu = 1e-2;
    merit.lambda = multiplier_estimate(problem, z, lo, hi);
  }
  {
    const Eigen::VectorXd c = problem.constraints(z);
    const Eigen::VectorXd grad_l =
        problem.objective_gradient(z) - problem.constraint_jacobian(z).transpose() * merit.lambda;
    result.z = z;
    result.multipliers = merit.lambda;
    result.objective = problem.objective(z);
    result.max_violation = c.size() ? c.lpNorm<Eigen::Infinity>() : 0.0;
    result.optimality = projected_gradient_norm(z, grad_l, lo, hi);
    result.inner_iterations = total;
    best = result;
  }
  for (int outer = 0; outer < options.max_outer_iterations && total < options.max_total_iterations; ++outer) {
    const InnerStats inner = minimize_merit(merit, lo, hi, z, std::max(omega, options.optimality_tol),
                                            std::min(options.max_inner_iterations,
                                                     options.max_total_iterations - total),
                                            barrier);
    total += inner.iterations;

    const Eigen::VectorXd c = problem.constraints(z);
    const double violation = c.size() ? c.lpNorm<Eigen::Infinity>() : 0.0;
    const Eigen::VectorXd lambda_next = merit.lambda - merit.rho * c;
    const Eigen::VectorXd grad_l =
        problem.objective_gradient(z) - problem.constraint_jacobian(z).transpose() * lambda_next;
    const double optimality = projected_gradient_norm(z, grad_l, lo, hi);

    result.z = z;
    result.multipliers = lambda_next;
    result.objective = problem.objective(z);
    result.max_violation = violation;
    result.optimality = optimality;
    result.outer_iterations = outer + 1;
    result.inner_iterations = total;
    result.converged = violation <= options.feasibility_tol && optimality <= options.optimality_tol;
    if (result.converged)
      return result;

    const bool better = violation < best.max_violation * 0.999 ||
                        (violation <= std::max(best.max_violation, options.feasibility_tol) &&
                         result.objective < best.objective);
    if (better)
      best = result;

    if (violation <= eta) {
      merit.lambda = lambda_next;
      eta = std::max(eta / std::pow(merit.rho, 0.9), options.feasibility_tol);
      omega = std::max(omega / merit.rho, options.optimality_tol);
    } else {
      merit.rho = std::min(10.0 * merit.rho, options.max_penalty);
      eta = std::max(1.0 / std::pow(merit.rho, 0.1), options.feasibility_tol);
      omega = std::max(1.0 / merit.rho, options.optimality_tol);
    }
  }
  best.outer_iterations = result.outer_iterations;
  best.inner_iterations = result.inner_iterations;
  return best;
}

}  // namespace windplan

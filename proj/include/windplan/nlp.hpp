#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace windplan {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// min f(z)  s.t.  c(z) = 0,  lower <= z <= upper.
///
/// Fixed variables (lower == upper) carry boundary equalities.
class NlpProblem
{
public:
  virtual ~NlpProblem() = default;

  virtual Eigen::Index num_variables() const = 0;
  virtual Eigen::Index num_constraints() const = 0;
  virtual const Eigen::VectorXd& lower() const = 0;
  virtual const Eigen::VectorXd& upper() const = 0;

  virtual double objective(const Eigen::VectorXd& z) const = 0;
  virtual Eigen::VectorXd objective_gradient(const Eigen::VectorXd& z) const = 0;
  virtual Eigen::VectorXd constraints(const Eigen::VectorXd& z) const = 0;
  virtual SparseMatrix constraint_jacobian(const Eigen::VectorXd& z) const = 0;
  /// Hessian of f(z) + sum_i w_i c_i(z), full symmetric storage.
  virtual SparseMatrix lagrangian_hessian(const Eigen::VectorXd& z, const Eigen::VectorXd& weights) const = 0;
};

struct SolverOptions
{
  double feasibility_tol = 1e-6;   ///< max |c_i|
  double optimality_tol = 1e-4;    ///< max |P(z - grad L) - z|
  int max_outer_iterations = 60;
  int max_inner_iterations = 300;
  int max_total_iterations = 4000;
  double initial_penalty = 1e4;
  double max_penalty = 1e10;
  /// Variables held at their starting values while the feasibility phase runs.
  std::vector<Eigen::Index> feasibility_hold;
};

struct SolverResult
{
  Eigen::VectorXd z;
  Eigen::VectorXd multipliers;
  double objective = 0.0;
  double max_violation = 0.0;
  double optimality = 0.0;
  int outer_iterations = 0;
  int inner_iterations = 0;
  bool converged = false;
};

/**
 * Bound-constrained augmented Lagrangian.
 *
 * A feasibility phase first minimizes |c|^2 with `feasibility_hold` fixed.
 * Outer loop: first-order multiplier updates with the penalty/tolerance
 * schedule of Conn, Gould and Toint. Inner loop: primal-dual log-barrier
 * Newton on the merit f - lambda^T c + rho/2 |c|^2 with the exact Hessian,
 * inertia shifts, fraction-to-boundary steps and an Armijo search.
 */
SolverResult solve_augmented_lagrangian(const NlpProblem& problem, const Eigen::VectorXd& z0,
                                        const SolverOptions& options = {});

/// Largest |P(z - g) - z| component for bounds [lower, upper].
double projected_gradient_norm(const Eigen::VectorXd& z, const Eigen::VectorXd& g, const Eigen::VectorXd& lower,
                               const Eigen::VectorXd& upper);

}  // namespace windplan

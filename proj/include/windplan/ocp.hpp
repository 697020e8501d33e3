#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "windplan/dynamics.hpp"
#include "windplan/nlp.hpp"
#include "windplan/wind_function.hpp"

namespace windplan {

inline constexpr double kDegree = 3.14159265358979323846 / 180.0;

/// Boundary conditions of the takeoff problem.
struct BoundarySpec
{
  QuadState initial = QuadState::Zero();
  double final_north_m = 15.0;
  double final_down_m = -5.0;
  /// Terminal box on [theta, u_r, w_r, q].
  Eigen::Vector4d terminal_lower{-30.0 * kDegree, -5.0, -5.0, -100.0 * kDegree};
  Eigen::Vector4d terminal_upper{30.0 * kDegree, 5.0, 5.0, 100.0 * kDegree};
  double t_init_s = 5.0;
  double t_final_min_s = 5.0;
  double t_final_max_s = 30.0;

  static BoundarySpec takeoff_preset();
  double waypoint_distance_m() const;
};

/// Node-wise state box and thrust limits.
struct PathBounds
{
  QuadState lower;
  QuadState upper;
  double thrust_max_n = 41.6964;

  static PathBounds conservative_preset(double thrust_max_n);
};

enum class CollocationScheme { Trapezoidal, HermiteSimpson };

struct TranscriptionConfig
{
  CollocationScheme scheme = CollocationScheme::HermiteSimpson;
  int segments = 60;
  double feasibility_tol = 1e-6;
  double optimality_tol = 1e-4;
  int max_iterations = 4000;
  /// Guess perturbation seed; 0 keeps the deterministic default guess.
  std::uint64_t guess_seed = 0;

  void validate() const;
};

/// Nondimensionalization: lengths by d, velocities by sqrt(g d), time by sqrt(d/g), thrust by T_max.
struct Scaling
{
  double length = 40.0;
  double velocity = 1.0;
  double time = 1.0;
  double thrust = 1.0;
  QuadState state = QuadState::Ones();

  static Scaling from(double length_m, double gravity, double thrust_max_n);
};

/**
 * Direct-collocation NLP of the free-final-time minimum-time takeoff.
 *
 * Decision vector (scaled): [x_0, u_0, x_1, u_1, ..., x_K, u_K, t_final]. The
 * equality constraints are the K collocation defects; boundary equalities are
 * fixed variables and the terminal and path boxes are variable bounds. The
 * Jacobian and the Lagrangian Hessian are exact (forward-mode automatic
 * differentiation of each segment; the wind enters through its local slope).
 */
class Transcription : public NlpProblem
{
public:
  Transcription(BoundarySpec boundary, PathBounds bounds, WindFunction wind, VehicleParams params,
                TranscriptionConfig cfg, Scaling scaling);

  Eigen::Index num_variables() const override { return 8 * (segments_ + 1) + 1; }
  Eigen::Index num_constraints() const override { return kStateDim * segments_; }
  const Eigen::VectorXd& lower() const override { return lower_; }
  const Eigen::VectorXd& upper() const override { return upper_; }

  double objective(const Eigen::VectorXd& z) const override;
  Eigen::VectorXd objective_gradient(const Eigen::VectorXd& z) const override;
  Eigen::VectorXd constraints(const Eigen::VectorXd& z) const override;
  SparseMatrix constraint_jacobian(const Eigen::VectorXd& z) const override;
  SparseMatrix lagrangian_hessian(const Eigen::VectorXd& z, const Eigen::VectorXd& weights) const override;

  /// Linear state interpolation, wind-consistent relative velocities, hover thrust
  /// and t_final = t_init + guess_duration(); nonzero seeds stretch and perturb it.
  Eigen::VectorXd initial_guess(std::uint64_t seed = 0) const;
  /// Guessed flight duration from the mean along-track wind.
  double guess_duration() const;

  /// Scaled vector from physical node data (for warm starts across meshes).
  Eigen::VectorXd pack(const Eigen::VectorXd& times, const Eigen::Matrix<double, 6, Eigen::Dynamic>& states,
                       const Eigen::Matrix<double, 2, Eigen::Dynamic>& controls, double t_final) const;

  Eigen::Index state_index(int node) const { return 8 * node; }
  Eigen::Index control_index(int node) const { return 8 * node + kStateDim; }
  Eigen::Index final_time_index() const { return 8 * (segments_ + 1); }

  int segments() const { return segments_; }
  const Scaling& scaling() const { return scaling_; }
  const BoundarySpec& boundary() const { return boundary_; }
  const PathBounds& bounds() const { return bounds_; }
  const VehicleParams& params() const { return params_; }
  const TranscriptionConfig& config() const { return cfg_; }
  double kinematic_lower_bound() const { return lower_bound_s_; }

  QuadState node_state(const Eigen::VectorXd& z, int node) const;
  ControlInput node_control(const Eigen::VectorXd& z, int node) const;
  double final_time(const Eigen::VectorXd& z) const { return z(final_time_index()) * scaling_.time; }

private:
  BoundarySpec boundary_;
  PathBounds bounds_;
  WindFunction wind_;
  VehicleParams params_;
  TranscriptionConfig cfg_;
  Scaling scaling_;
  int segments_;
  double lower_bound_s_;
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
};

/// Builds the NLP; throws std::invalid_argument on empty or inconsistent boxes.
Transcription transcribe(const BoundarySpec& boundary, const PathBounds& bounds, const WindFunction& wind,
                         const VehicleParams& params, const TranscriptionConfig& cfg);

/// Lower bound on t_final - t_init: relative motion from rest under at most
/// (2 T_max + m g)/m acceleration plus drift at the largest wind magnitude.
double kinematic_lower_bound(const BoundarySpec& boundary, const VehicleParams& params, double max_wind_mps);

struct SolverDiagnostics
{
  double max_defect = 0.0;          ///< scaled
  double max_bound_violation = 0.0; ///< scaled
  double optimality = 0.0;
  int iterations = 0;
  int outer_iterations = 0;
  bool converged = false;
};

struct TrajectoryPlan
{
  CollocationScheme scheme = CollocationScheme::HermiteSimpson;
  Eigen::VectorXd times;
  Eigen::Matrix<double, 6, Eigen::Dynamic> states;
  Eigen::Matrix<double, 2, Eigen::Dynamic> controls;
  double t_init_s = 0.0;
  double cost_s = 0.0;
  double thrust_max_n = 0.0;
  SolverDiagnostics diagnostics;

  double t_final_s() const { return times(times.size() - 1); }
  QuadState final_state() const { return states.col(states.cols() - 1); }
};

TrajectoryPlan solve(const Transcription& nlp, const Eigen::VectorXd& guess);

/// Hermite-Simpson solve with a trapezoidal fallback: if the first attempt does
/// not converge, a trapezoidal solution warm-starts a second Hermite-Simpson
/// attempt, and the best converged plan is returned.
TrajectoryPlan plan_trajectory(const BoundarySpec& boundary, const PathBounds& bounds, const WindFunction& wind,
                               const VehicleParams& params, const TranscriptionConfig& cfg);

enum class ControlInterpolation { Linear, Pchip };

/// Replay control: interpolation of node controls clamped to [0, T_max].
ControlSchedule control_schedule(const TrajectoryPlan& plan, ControlInterpolation mode);

struct VerificationReport
{
  QuadState planned_final;
  QuadState estimated_final;
  QuadState true_final;
  double waypoint_distance_m = 0.0;
  double gate_tolerance_m = 0.0;
  double estimated_miss_m = 0.0;   ///< estimated-wind replay vs waypoint
  double final_error_m = 0.0;      ///< true-wind replay vs planned final position
  bool passed = false;
  SampledTrajectory estimated_replay;
  SampledTrajectory true_replay;
};

/// Replays the plan under both winds and applies the 2 %-of-waypoint-distance gate.
VerificationReport verify(const TrajectoryPlan& plan, const WindFunction& wind_estimate,
                          const WindFunction& wind_true, const VehicleParams& params,
                          ControlInterpolation mode = ControlInterpolation::Linear, int samples = 201);

}  // namespace windplan

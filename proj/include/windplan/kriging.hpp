#pragma once

#include <Eigen/Core>

#include "windplan/wind_function.hpp"
#include "windplan/windfield.hpp"

namespace windplan {

/// Observations located in the wind frame.
struct ObservationSet
{
  Eigen::VectorXd locations_m;
  Eigen::VectorXd values_mps;
  double noise_var = 0.0;

  Eigen::Index size() const { return locations_m.size(); }
};

/// Wind-frame interval of measurement locations retained for regression at time t.
///
/// [|c| t - eta L, d + |c| t_m + eta L]: every coordinate the vehicle can still
/// reach during [t, t_m], padded by eta length scales.
struct TruncationZone
{
  double lo_m;
  double hi_m;

  static TruncationZone at(double t_s, const ConvectionSpec& conv, double eta, double length_scale_m);
  bool contains(double beta) const { return beta >= lo_m && beta <= hi_m; }
};

/// beta = z - c t for every log row; values are copied unchanged.
ObservationSet correct_locations(const MeasurementLog& log, const ConvectionSpec& conv, double noise_var);

/// Keeps observations inside TruncationZone::at(t, ...), preserving order.
ObservationSet truncate(const ObservationSet& obs, double t_s, const ConvectionSpec& conv, double eta,
                        double length_scale_m);

/// Ordinary-Kriging posterior of the frozen profile over the wind-frame grid.
class WindEstimate
{
public:
  WindEstimate(Eigen::VectorXd grid, Eigen::VectorXd mean, Eigen::MatrixXd covariance, GpHyperparams hyper,
               ConvectionSpec conv, bool prior_fallback);

  const Eigen::VectorXd& grid() const { return grid_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  Eigen::VectorXd variance() const { return cov_.diagonal(); }
  const GpHyperparams& hyper() const { return hyper_; }
  const ConvectionSpec& convection() const { return conv_; }
  /// Set when no observation survived truncation and the prior was returned.
  bool prior_fallback() const { return prior_fallback_; }

  /// Posterior mean at (p_N, t), linearly interpolated; throws OutOfSpanError.
  double query_inertial(double north_m, double t_s) const;
  WindSample sample_inertial(double north_m, double t_s) const;
  double variance_inertial(double north_m, double t_s) const;

private:
  UniformGrid uniform_grid() const { return {grid_(0), grid_(grid_.size() - 1), grid_.size()}; }

  Eigen::VectorXd grid_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  GpHyperparams hyper_;
  ConvectionSpec conv_;
  bool prior_fallback_;
};

/// Ordinary Kriging with unknown constant mean.
///
/// Solves the (M+1) ones-bordered system with a symmetric indefinite LDLT and
/// evaluates mean = B A^-1 [f; 0], P = K(g,g) - B A^-1 B^T with B = [K(g,beta) 1].
/// sigma_n^2 sits on each observation's own diagonal entry. Throws
/// std::invalid_argument on noiseless duplicate locations.
WindEstimate fit(const ObservationSet& obs, const Eigen::VectorXd& grid, const GpHyperparams& hyper,
                 const ConvectionSpec& conv);

enum class SpanPolicy { Strict, Clamp };

/// Estimate as the north wind seen by the vehicle, signed by the flow direction.
/// Clamp holds the end values (zero slope) outside the span; the optimizer uses
/// it so trial iterates never throw.
WindFunction as_wind_function(const WindEstimate& estimate, SpanPolicy policy = SpanPolicy::Strict);

}  // namespace windplan

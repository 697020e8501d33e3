#include "windplan/ocp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <unsupported/Eigen/AutoDiff>

#include "hessian_jet.hpp"

namespace windplan {

namespace {

constexpr int kSegmentVars = 2 * (kStateDim + kControlDim) + 1;

using Jet = Eigen::AutoDiffScalar<Eigen::Matrix<double, kSegmentVars, 1>>;
using Jet2 = HessianJet<kSegmentVars>;

inline double value_of(double x) { return x; }
inline double value_of(const Jet& x) { return x.value(); }
inline double value_of(const Jet2& x) { return x.v; }

/// Shared read-only context of every segment.
struct SegmentContext
{
  const WindFunction& wind;
  const VehicleParams& params;
  const Scaling& scaling;
  CollocationScheme scheme;
  double t_init;
  int segments;
};

/// Scaled dynamics dx~/dt~ at physical time t (itself a scalar of the segment variables).
template <typename S>
StateVector<S> scaled_rate(const StateVector<S>& xs, const ControlVector<S>& us, const S& t, const SegmentContext& ctx)
{
  StateVector<S> x;
  for (int i = 0; i < kStateDim; ++i)
    x(i) = xs(i) * ctx.scaling.state(i);
  ControlVector<S> u;
  for (int i = 0; i < kControlDim; ++i)
    u(i) = us(i) * ctx.scaling.thrust;

  const double pn0 = value_of(x(kNorth));
  const double t0 = value_of(t);
  const WindSample w = ctx.wind.sample(pn0, t0);
  const S wind = S(w.value) + w.d_north * (x(kNorth) - pn0) + w.d_time * (t - t0);

  StateVector<S> dx = eom<S>(x, u, wind, ctx.params);
  for (int i = 0; i < kStateDim; ++i)
    dx(i) *= ctx.scaling.time / ctx.scaling.state(i);
  return dx;
}

/// Defect of segment k; v = [x_k, u_k, x_{k+1}, u_{k+1}, t_final], all scaled.
template <typename S>
StateVector<S> segment_defect(const Eigen::Matrix<S, kSegmentVars, 1>& v, int k, const SegmentContext& ctx)
{
  const StateVector<S> x0 = v.template segment<kStateDim>(0);
  const ControlVector<S> u0 = v.template segment<kControlDim>(kStateDim);
  const StateVector<S> x1 = v.template segment<kStateDim>(kStateDim + kControlDim);
  const ControlVector<S> u1 = v.template segment<kControlDim>(2 * kStateDim + kControlDim);
  const S& tf_scaled = v(kSegmentVars - 1);

  const S duration = tf_scaled * ctx.scaling.time - ctx.t_init;
  const S h = duration / double(ctx.segments);
  const S h_scaled = h / ctx.scaling.time;
  const S t0 = ctx.t_init + h * double(k);
  const S t1 = ctx.t_init + h * double(k + 1);

  const StateVector<S> f0 = scaled_rate<S>(x0, u0, t0, ctx);
  const StateVector<S> f1 = scaled_rate<S>(x1, u1, t1, ctx);
  StateVector<S> defect;
  if (ctx.scheme == CollocationScheme::Trapezoidal) {
    for (int i = 0; i < kStateDim; ++i)
      defect(i) = x1(i) - x0(i) - h_scaled * 0.5 * (f0(i) + f1(i));
    return defect;
  }

  StateVector<S> xm;
  ControlVector<S> um;
  for (int i = 0; i < kStateDim; ++i)
    xm(i) = 0.5 * (x0(i) + x1(i)) + h_scaled / 8.0 * (f0(i) - f1(i));
  for (int i = 0; i < kControlDim; ++i)
    um(i) = 0.5 * (u0(i) + u1(i));
  const S tm = t0 + 0.5 * h;
  const StateVector<S> fm = scaled_rate<S>(xm, um, tm, ctx);
  for (int i = 0; i < kStateDim; ++i)
    defect(i) = x1(i) - x0(i) - h_scaled / 6.0 * (f0(i) + 4.0 * fm(i) + f1(i));
  return defect;
}

std::array<Eigen::Index, kSegmentVars> segment_indices(const Transcription& nlp, int k)
{
  std::array<Eigen::Index, kSegmentVars> idx{};
  for (int i = 0; i < kStateDim + kControlDim; ++i) {
    idx[std::size_t(i)] = nlp.state_index(k) + i;
    idx[std::size_t(kStateDim + kControlDim + i)] = nlp.state_index(k + 1) + i;
  }
  idx[kSegmentVars - 1] = nlp.final_time_index();
  return idx;
}

Eigen::Matrix<double, kSegmentVars, 1> gather(const Eigen::VectorXd& z,
                                              const std::array<Eigen::Index, kSegmentVars>& idx)
{
  Eigen::Matrix<double, kSegmentVars, 1> v;
  for (int i = 0; i < kSegmentVars; ++i)
    v(i) = z(idx[std::size_t(i)]);
  return v;
}

}  // namespace

Scaling Scaling::from(double length_m, double gravity, double thrust_max_n)
{
  Scaling s;
  s.length = length_m;
  s.velocity = std::sqrt(gravity * length_m);
  s.time = std::sqrt(length_m / gravity);
  s.thrust = thrust_max_n;
  s.state << s.length, s.length, 1.0, s.velocity, s.velocity, 1.0 / s.time;
  return s;
}

BoundarySpec BoundarySpec::takeoff_preset()
{
  BoundarySpec b;
  b.initial << 5.0, 0.0, 0.0, 0.0, 0.0, 0.0;
  return b;
}

double BoundarySpec::waypoint_distance_m() const
{
  return std::hypot(final_north_m - initial(kNorth), final_down_m - initial(kDown));
}

PathBounds PathBounds::conservative_preset(double thrust_max_n)
{
  PathBounds b;
  b.upper << 50.0, 50.0, 60.0 * kDegree, 50.0, 50.0, 1000.0 * kDegree;
  b.lower = -b.upper;
  b.thrust_max_n = thrust_max_n;
  return b;
}

void TranscriptionConfig::validate() const
{
  if (segments < 10)
    throw std::invalid_argument("transcription needs at least 10 segments");
  if (!(feasibility_tol > 0.0) || !(optimality_tol > 0.0) || max_iterations < 1)
    throw std::invalid_argument("invalid solver tolerances");
}

double kinematic_lower_bound(const BoundarySpec& boundary, const VehicleParams& params, double max_wind_mps)
{
  const double accel = (2.0 * params.thrust_max_n + params.mass_kg * params.gravity) / params.mass_kg;
  const double dist = boundary.waypoint_distance_m();
  const double w = std::abs(max_wind_mps);
  // 0.5 a t^2 + w t = dist
  return (-w + std::sqrt(w * w + 2.0 * accel * dist)) / accel;
}

Transcription::Transcription(BoundarySpec boundary, PathBounds bounds, WindFunction wind, VehicleParams params,
                             TranscriptionConfig cfg, Scaling scaling)
    : boundary_(std::move(boundary)), bounds_(std::move(bounds)), wind_(std::move(wind)), params_(params),
      cfg_(cfg), scaling_(scaling), segments_(cfg.segments), lower_bound_s_(0.0)
{
  cfg_.validate();
  params_.validate();
  if ((bounds_.lower.array() > bounds_.upper.array()).any() || !(bounds_.thrust_max_n > 0.0))
    throw std::invalid_argument("empty path box");
  if ((boundary_.terminal_lower.array() > boundary_.terminal_upper.array()).any())
    throw std::invalid_argument("empty terminal box");
  if (!(boundary_.t_final_max_s > boundary_.t_init_s))
    throw std::invalid_argument("t_final upper bound must exceed t_init");
  if ((boundary_.initial.array() < bounds_.lower.array()).any() ||
      (boundary_.initial.array() > bounds_.upper.array()).any())
    throw std::invalid_argument("initial state outside the path box");
  const Eigen::Vector2d target(boundary_.final_north_m, boundary_.final_down_m);
  if ((target.array() < bounds_.lower.head<2>().array()).any() ||
      (target.array() > bounds_.upper.head<2>().array()).any())
    throw std::invalid_argument("waypoint outside the path box");

  const Eigen::Index n = num_variables();
  lower_.resize(n);
  upper_.resize(n);
  const QuadState lo = bounds_.lower.cwiseQuotient(scaling_.state);
  const QuadState hi = bounds_.upper.cwiseQuotient(scaling_.state);
  const double umax = bounds_.thrust_max_n / scaling_.thrust;
  for (int k = 0; k <= segments_; ++k) {
    lower_.segment<kStateDim>(state_index(k)) = lo;
    upper_.segment<kStateDim>(state_index(k)) = hi;
    lower_.segment<kControlDim>(control_index(k)).setZero();
    upper_.segment<kControlDim>(control_index(k)).setConstant(umax);
  }
  const QuadState x0 = boundary_.initial.cwiseQuotient(scaling_.state);
  lower_.segment<kStateDim>(state_index(0)) = x0;
  upper_.segment<kStateDim>(state_index(0)) = x0;

  const Eigen::Index last = state_index(segments_);
  lower_(last + kNorth) = upper_(last + kNorth) = boundary_.final_north_m / scaling_.state(kNorth);
  lower_(last + kDown) = upper_(last + kDown) = boundary_.final_down_m / scaling_.state(kDown);
  for (int i = 0; i < 4; ++i) {
    const Eigen::Index j = last + kPitch + i;
    const double s = scaling_.state(kPitch + i);
    lower_(j) = std::max(lower_(j), boundary_.terminal_lower(i) / s);
    upper_(j) = std::min(upper_(j), boundary_.terminal_upper(i) / s);
    if (lower_(j) > upper_(j))
      throw std::invalid_argument("terminal box does not intersect the path box");
  }


  // Largest wind magnitude over the reachable box, sampled coarsely in time.
  double max_wind = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double pn = bounds_.lower(kNorth) + (bounds_.upper(kNorth) - bounds_.lower(kNorth)) * i / 200.0;
    for (int j = 0; j <= 20; ++j) {
      const double t = boundary_.t_init_s + (boundary_.t_final_max_s - boundary_.t_init_s) * j / 20.0;
      try {
        max_wind = std::max(max_wind, std::abs(wind_(pn, t)));
      } catch (const OutOfSpanError&) {
      }
    }
  }
  lower_bound_s_ = windplan::kinematic_lower_bound(boundary_, params_, max_wind);

  const double t_min = std::max(boundary_.t_final_min_s, boundary_.t_init_s + std::max(lower_bound_s_, 1e-3));
  lower_(final_time_index()) = t_min / scaling_.time;
  upper_(final_time_index()) = boundary_.t_final_max_s / scaling_.time;
}

Transcription transcribe(const BoundarySpec& boundary, const PathBounds& bounds, const WindFunction& wind,
                         const VehicleParams& params, const TranscriptionConfig& cfg)
{
  const double length = std::max(std::abs(boundary.waypoint_distance_m()), 1.0);
  return Transcription(boundary, bounds, wind, params, cfg,
                       Scaling::from(std::max(length, 40.0), params.gravity, params.thrust_max_n));
}

double Transcription::objective(const Eigen::VectorXd& z) const
{
  return z(final_time_index()) - boundary_.t_init_s / scaling_.time;
}

Eigen::VectorXd Transcription::objective_gradient(const Eigen::VectorXd& z) const
{
  Eigen::VectorXd g = Eigen::VectorXd::Zero(z.size());
  g(final_time_index()) = 1.0;
  return g;
}

Eigen::VectorXd Transcription::constraints(const Eigen::VectorXd& z) const
{
  const SegmentContext ctx{wind_, params_, scaling_, cfg_.scheme, boundary_.t_init_s, segments_};
  Eigen::VectorXd c(num_constraints());
  for (int k = 0; k < segments_; ++k) {
    const auto v = gather(z, segment_indices(*this, k));
    c.segment<kStateDim>(kStateDim * k) = segment_defect<double>(v, k, ctx);
  }
  return c;
}

SparseMatrix Transcription::constraint_jacobian(const Eigen::VectorXd& z) const
{
  const SegmentContext ctx{wind_, params_, scaling_, cfg_.scheme, boundary_.t_init_s, segments_};
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(std::size_t(segments_ * kStateDim * kSegmentVars));
  for (int k = 0; k < segments_; ++k) {
    const auto idx = segment_indices(*this, k);
    const auto v = gather(z, idx);
    Eigen::Matrix<Jet, kSegmentVars, 1> vj;
    for (int i = 0; i < kSegmentVars; ++i)
      vj(i) = Jet(v(i), kSegmentVars, i);
    const StateVector<Jet> d = segment_defect<Jet>(vj, k, ctx);
    for (int r = 0; r < kStateDim; ++r)
      for (int i = 0; i < kSegmentVars; ++i)
        trips.emplace_back(kStateDim * k + r, idx[std::size_t(i)], d(r).derivatives()(i));
  }
  SparseMatrix jac(num_constraints(), num_variables());
  jac.setFromTriplets(trips.begin(), trips.end());
  return jac;
}

SparseMatrix Transcription::lagrangian_hessian(const Eigen::VectorXd& z, const Eigen::VectorXd& weights) const
{
  const SegmentContext ctx{wind_, params_, scaling_, cfg_.scheme, boundary_.t_init_s, segments_};
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(std::size_t(segments_ * kSegmentVars * kSegmentVars));
  for (int k = 0; k < segments_; ++k) {
    const auto idx = segment_indices(*this, k);
    const auto v = gather(z, idx);
    Eigen::Matrix<Jet2, kSegmentVars, 1> vj;
    for (int i = 0; i < kSegmentVars; ++i)
      vj(i) = Jet2::variable(v(i), i);
    const StateVector<Jet2> d = segment_defect<Jet2>(vj, k, ctx);
    Jet2 s = d(0) * weights(kStateDim * k);
    for (int r = 1; r < kStateDim; ++r)
      s += d(r) * weights(kStateDim * k + r);
    for (int i = 0; i < kSegmentVars; ++i)
      for (int j = 0; j < kSegmentVars; ++j) {
        trips.emplace_back(idx[std::size_t(i)], idx[std::size_t(j)], s.hessian(i, j));
      }
  }
  SparseMatrix h(num_variables(), num_variables());
  h.setFromTriplets(trips.begin(), trips.end());
  return h;
}

QuadState Transcription::node_state(const Eigen::VectorXd& z, int node) const
{
  return z.segment<kStateDim>(state_index(node)).cwiseProduct(scaling_.state);
}

ControlInput Transcription::node_control(const Eigen::VectorXd& z, int node) const
{
  return z.segment<kControlDim>(control_index(node)) * scaling_.thrust;
}

double Transcription::guess_duration() const
{
  // Quarter of the peak acceleration against the mean wind along the straight path.
  const Eigen::Vector2d start = boundary_.initial.head<2>();
  const Eigen::Vector2d delta = Eigen::Vector2d(boundary_.final_north_m, boundary_.final_down_m) - start;
  const double dist = delta.norm();
  double wind = 0.0;
  int count = 0;
  for (int i = 0; i <= 20; ++i) {
    try {
      wind += wind_(start(0) + delta(0) * i / 20.0, boundary_.t_init_s);
      ++count;
    } catch (const OutOfSpanError&) {
    }
  }
  const double along = count > 0 ? wind / count * delta(0) / dist : 0.0;
  const double accel = 0.25 * (2.0 * params_.thrust_max_n + params_.mass_kg * params_.gravity) / params_.mass_kg;
  const double t = (-along + std::sqrt(along * along + 2.0 * accel * dist)) / accel;
  return std::clamp(t, std::max(lower_bound_s_, 1e-3), boundary_.t_final_max_s - boundary_.t_init_s);
}

Eigen::VectorXd Transcription::initial_guess(std::uint64_t seed) const
{
  const Eigen::Index n = num_variables();
  Eigen::VectorXd z(n);
  const QuadState x0 = boundary_.initial;
  QuadState x1 = x0;
  x1(kNorth) = boundary_.final_north_m;
  x1(kDown) = boundary_.final_down_m;
  for (int i = 0; i < 4; ++i)
    x1(kPitch + i) = std::clamp(0.0, boundary_.terminal_lower(i), boundary_.terminal_upper(i));

  const double hover = params_.hover_thrust() / scaling_.thrust;
  const double duration = guess_duration();
  const Eigen::Vector2d ground = (x1.head<2>() - x0.head<2>()) / duration;
  for (int k = 0; k <= segments_; ++k) {
    const double s = double(k) / segments_;
    QuadState x = (1.0 - s) * x0 + s * x1;
    if (k > 0 && k < segments_) {
      double wind = 0.0;
      try {
        wind = wind_(x(kNorth), boundary_.t_init_s + s * duration);
      } catch (const OutOfSpanError&) {
      }
      x(kSurge) = std::clamp(ground(0) - wind, bounds_.lower(kSurge), bounds_.upper(kSurge));
      x(kHeave) = std::clamp(ground(1), bounds_.lower(kHeave), bounds_.upper(kHeave));
    }
    z.segment<kStateDim>(state_index(k)) = x.cwiseQuotient(scaling_.state);
    z.segment<kControlDim>(control_index(k)).setConstant(hover);
  }
  z(final_time_index()) = (boundary_.t_init_s + duration) / scaling_.time;

  if (seed != 0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double stretched = duration * (1.2 + 0.2 * unit(rng));
    z(final_time_index()) = (boundary_.t_init_s + stretched) / scaling_.time;
    for (int k = 0; k <= segments_; ++k) {
      for (int i = 0; i < kStateDim; ++i)
        z(state_index(k) + i) += 0.02 * unit(rng);
      for (int i = 0; i < kControlDim; ++i)
        z(control_index(k) + i) += 0.2 * unit(rng);
    }
  }
  return z.cwiseMax(lower_).cwiseMin(upper_);
}

Eigen::VectorXd Transcription::pack(const Eigen::VectorXd& times, const Eigen::Matrix<double, 6, Eigen::Dynamic>& states,
                                    const Eigen::Matrix<double, 2, Eigen::Dynamic>& controls, double t_final) const
{
  Eigen::VectorXd z(num_variables());
  const double t0 = times(0);
  const double span = times(times.size() - 1) - t0;
  Eigen::Index seg = 0;
  for (int k = 0; k <= segments_; ++k) {
    const double t = t0 + span * double(k) / segments_;
    while (seg + 2 < times.size() && times(seg + 1) < t)
      ++seg;
    const double w = std::clamp((t - times(seg)) / (times(seg + 1) - times(seg)), 0.0, 1.0);
    const QuadState x = (1.0 - w) * states.col(seg) + w * states.col(seg + 1);
    const ControlInput u = (1.0 - w) * controls.col(seg) + w * controls.col(seg + 1);
    z.segment<kStateDim>(state_index(k)) = x.cwiseQuotient(scaling_.state);
    z.segment<kControlDim>(control_index(k)) = u / scaling_.thrust;
  }
  z(final_time_index()) = t_final / scaling_.time;
  return z.cwiseMax(lower_).cwiseMin(upper_);
}

}  // namespace windplan

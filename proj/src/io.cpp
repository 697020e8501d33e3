#include "windplan/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace windplan::io {

namespace {

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vector(const std::vector<double>& v)
{
  return Eigen::Map<const Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
}

template <typename T>
T field(const Json& j, const char* key)
{
  if (!j.contains(key))
    throw ArtifactError(std::string("missing field '") + key + "'");
  return j.at(key).get<T>();
}

template <typename T>
void read_optional(const Json& j, const char* key, T& out)
{
  if (j.contains(key))
    out = j.at(key).get<T>();
}

constexpr const char* kStateKeys[kStateDim] = {"pN_m", "pD_m", "theta_rad", "ur_mps", "wr_mps", "q_radps"};

Json state_json(const QuadState& x)
{
  Json j = Json::object();
  for (int i = 0; i < kStateDim; ++i)
    j[kStateKeys[i]] = x(i);
  return j;
}

QuadState state_from(const Json& j, QuadState x)
{
  for (int i = 0; i < kStateDim; ++i)
    read_optional(j, kStateKeys[i], x(i));
  return x;
}

/// {"key": [lo, hi]} for each listed state component.
Json box_json(const double* lo, const double* hi, const int* components, int n)
{
  Json j = Json::object();
  for (int k = 0; k < n; ++k)
    j[kStateKeys[components[k]]] = {lo[k], hi[k]};
  return j;
}

void box_from(const Json& j, double* lo, double* hi, const int* components, int n)
{
  for (int k = 0; k < n; ++k) {
    const char* key = kStateKeys[components[k]];
    if (!j.contains(key))
      continue;
    const auto v = j.at(key).get<std::vector<double>>();
    if (v.size() != 2)
      throw ArtifactError(std::string("box entry '") + key + "' must be [lower, upper]");
    lo[k] = v[0];
    hi[k] = v[1];
  }
}

constexpr int kAllStates[kStateDim] = {0, 1, 2, 3, 4, 5};
constexpr int kTerminalStates[4] = {int(kPitch), int(kSurge), int(kHeave), int(kPitchRate)};

const char* scheme_name(CollocationScheme s)
{
  return s == CollocationScheme::Trapezoidal ? "trapezoidal" : "hermite_simpson";
}

CollocationScheme scheme_from(const std::string& s)
{
  if (s == "trapezoidal")
    return CollocationScheme::Trapezoidal;
  if (s == "hermite_simpson")
    return CollocationScheme::HermiteSimpson;
  throw ArtifactError("unknown collocation scheme '" + s + "'");
}

}  // namespace

std::string format_double(double x)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw ArtifactError("cannot write " + path.string());
  out << text;
}

std::string read_text(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ArtifactError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

Json read_json(const std::filesystem::path& path)
{
  try {
    return Json::parse(read_text(path));
  } catch (const Json::exception& e) {
    throw ArtifactError(path.string() + ": " + e.what());
  }
}

std::string CsvTable::to_string() const
{
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i)
    out += (i ? "," : "") + header[i];
  out += "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out += (i ? "," : "") + format_double(row[i]);
    out += "\n";
  }
  return out;
}

CsvTable CsvTable::parse(const std::string& text)
{
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw ArtifactError("empty CSV");
  std::istringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');)
    t.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    std::vector<double> row;
    std::istringstream rs(line);
    for (std::string cell; std::getline(rs, cell, ',');) {
      char* end = nullptr;
      row.push_back(std::strtod(cell.c_str(), &end));
      if (end == cell.c_str())
        throw ArtifactError("non-numeric CSV cell '" + cell + "'");
    }
    if (row.size() != t.header.size())
      throw ArtifactError("CSV row width does not match header");
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<double> CsvTable::column(const std::string& name) const
{
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end())
    throw ArtifactError("CSV column '" + name + "' missing");
  const std::size_t c = std::size_t(it - header.begin());
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows)
    out.push_back(row[c]);
  return out;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) { write_text(path, table.to_string()); }

CsvTable read_csv(const std::filesystem::path& path) { return CsvTable::parse(read_text(path)); }

CsvTable profile_table(const WindProfile& profile)
{
  CsvTable t{{"beta_m", "delta_mps"}, {}};
  for (Eigen::Index i = 0; i < profile.grid.size(); ++i)
    t.rows.push_back({profile.grid(i), profile.values(i)});
  return t;
}

Json profile_meta(const WindProfile& profile)
{
  return Json{{"hyperparameters", to_json(profile.hyper)},
              {"convection", to_json(profile.convection)},
              {"grid_points", profile.grid.size()},
              {"seed", profile.seed}};
}

WindProfile profile_from(const CsvTable& table, const Json& meta)
{
  WindProfile p;
  p.grid = from_vector(table.column("beta_m"));
  p.values = from_vector(table.column("delta_mps"));
  p.hyper = hyper_from(field<Json>(meta, "hyperparameters"));
  p.convection = convection_from(field<Json>(meta, "convection"));
  p.seed = field<std::uint64_t>(meta, "seed");
  if (p.grid.size() < 2)
    throw ArtifactError("profile needs at least two grid points");
  return p;
}

CsvTable measurement_table(const MeasurementLog& log)
{
  CsvTable t{{"t_sec", "z_m", "y_mps"}, {}};
  for (const Measurement& m : log)
    t.rows.push_back({m.t_s, m.z_m, m.y_mps});
  return t;
}

MeasurementLog measurements_from(const CsvTable& table)
{
  const auto t = table.column("t_sec"), z = table.column("z_m"), y = table.column("y_mps");
  MeasurementLog log;
  for (std::size_t i = 0; i < t.size(); ++i)
    log.push_back({t[i], z[i], y[i]});
  return log;
}

Json estimate_json(const WindEstimate& estimate, bool full_covariance)
{
  Json j{{"hyperparameters", to_json(estimate.hyper())},
         {"convection", to_json(estimate.convection())},
         {"prior_fallback", estimate.prior_fallback()},
         {"grid_m", to_vector(estimate.grid())},
         {"mean_mps", to_vector(estimate.mean())},
         {"variance_m2ps2", to_vector(estimate.variance())}};
  if (full_covariance) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < estimate.covariance().rows(); ++i)
      rows.push_back(to_vector(estimate.covariance().row(i).transpose()));
    j["covariance_m2ps2"] = std::move(rows);
  }
  return j;
}

WindEstimate estimate_from(const Json& j)
{
  const Eigen::VectorXd grid = from_vector(field<std::vector<double>>(j, "grid_m"));
  const Eigen::VectorXd mean = from_vector(field<std::vector<double>>(j, "mean_mps"));
  Eigen::MatrixXd cov;
  if (j.contains("covariance_m2ps2")) {
    const auto rows = j.at("covariance_m2ps2").get<std::vector<std::vector<double>>>();
    cov.resize(Eigen::Index(rows.size()), grid.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      cov.row(Eigen::Index(i)) = from_vector(rows[i]).transpose();
  } else {
    cov = from_vector(field<std::vector<double>>(j, "variance_m2ps2")).asDiagonal();
  }
  return WindEstimate(grid, mean, cov, hyper_from(field<Json>(j, "hyperparameters")),
                      convection_from(field<Json>(j, "convection")), field<bool>(j, "prior_fallback"));
}

CsvTable trajectory_table(const TrajectoryPlan& plan)
{
  CsvTable t{{"t_sec", "pN_m", "pD_m", "theta_rad", "ur_mps", "wr_mps", "q_radps", "Tf_N", "Tr_N"}, {}};
  for (Eigen::Index k = 0; k < plan.times.size(); ++k) {
    std::vector<double> row{plan.times(k)};
    for (int i = 0; i < kStateDim; ++i)
      row.push_back(plan.states(i, k));
    for (int i = 0; i < kControlDim; ++i)
      row.push_back(plan.controls(i, k));
    t.rows.push_back(std::move(row));
  }
  return t;
}

Json plan_diagnostics(const TrajectoryPlan& plan, double lower_bound_s)
{
  const SolverDiagnostics& d = plan.diagnostics;
  return Json{{"scheme", scheme_name(plan.scheme)},
              {"segments", plan.times.size() - 1},
              {"t_init_s", plan.t_init_s},
              {"t_final_s", plan.t_final_s()},
              {"cost_s", plan.cost_s},
              {"kinematic_lower_bound_s", lower_bound_s},
              {"thrust_max_N", plan.thrust_max_n},
              {"converged", d.converged},
              {"max_defect_scaled", d.max_defect},
              {"max_bound_violation_scaled", d.max_bound_violation},
              {"optimality", d.optimality},
              {"inner_iterations", d.iterations},
              {"outer_iterations", d.outer_iterations}};
}

TrajectoryPlan plan_from(const CsvTable& table, const Json& diagnostics)
{
  TrajectoryPlan plan;
  const auto t = table.column("t_sec");
  const Eigen::Index n = Eigen::Index(t.size());
  if (n < 2)
    throw ArtifactError("trajectory needs at least two nodes");
  plan.times = from_vector(t);
  plan.states.resize(kStateDim, n);
  plan.controls.resize(kControlDim, n);
  const char* state_cols[] = {"pN_m", "pD_m", "theta_rad", "ur_mps", "wr_mps", "q_radps"};
  const char* control_cols[] = {"Tf_N", "Tr_N"};
  for (int i = 0; i < kStateDim; ++i)
    plan.states.row(i) = from_vector(table.column(state_cols[i])).transpose();
  for (int i = 0; i < kControlDim; ++i)
    plan.controls.row(i) = from_vector(table.column(control_cols[i])).transpose();
  plan.scheme = scheme_from(field<std::string>(diagnostics, "scheme"));
  plan.t_init_s = field<double>(diagnostics, "t_init_s");
  plan.cost_s = field<double>(diagnostics, "cost_s");
  plan.thrust_max_n = field<double>(diagnostics, "thrust_max_N");
  SolverDiagnostics& d = plan.diagnostics;
  d.converged = field<bool>(diagnostics, "converged");
  d.max_defect = field<double>(diagnostics, "max_defect_scaled");
  d.max_bound_violation = field<double>(diagnostics, "max_bound_violation_scaled");
  d.optimality = field<double>(diagnostics, "optimality");
  d.iterations = field<int>(diagnostics, "inner_iterations");
  d.outer_iterations = field<int>(diagnostics, "outer_iterations");
  return plan;
}

Json verification_json(const VerificationReport& r)
{
  return Json{{"passed", r.passed},
              {"waypoint_distance_m", r.waypoint_distance_m},
              {"gate_tolerance_m", r.gate_tolerance_m},
              {"estimated_miss_m", r.estimated_miss_m},
              {"final_error_m", r.final_error_m},
              {"planned_final_state", state_json(r.planned_final)},
              {"estimated_final_state", state_json(r.estimated_final)},
              {"true_final_state", state_json(r.true_final)}};
}

Json to_json(const GpHyperparams& h)
{
  return Json{{"mean_mps", h.mean_mps}, {"variance_m2ps2", h.variance()}, {"length_scale_m", h.length_scale_m}};
}

Json to_json(const ConvectionSpec& c)
{
  return Json{{"speed_mps", c.speed_mps}, {"operating_length_m", c.operating_length_m}, {"horizon_s", c.horizon_s}};
}

Json to_json(const AnemometerArray& a)
{
  return Json{{"positions_m", a.positions_m},
              {"sample_rate_hz", a.sample_rate_hz},
              {"noise_var_m2ps2", a.noise_var},
              {"sampling_end_s", a.sampling_end_s}};
}

Json to_json(const BoundarySpec& b)
{
  return Json{{"initial_state", state_json(b.initial)},
              {"final_north_m", b.final_north_m},
              {"final_down_m", b.final_down_m},
              {"terminal_box", box_json(b.terminal_lower.data(), b.terminal_upper.data(), kTerminalStates, 4)},
              {"t_init_s", b.t_init_s},
              {"t_final_min_s", b.t_final_min_s},
              {"t_final_max_s", b.t_final_max_s}};
}

Json to_json(const PathBounds& b)
{
  return Json{{"state_box", box_json(b.lower.data(), b.upper.data(), kAllStates, kStateDim)},
              {"thrust_max_N", b.thrust_max_n}};
}

Json to_json(const VehicleParams& p)
{
  return Json{{"mass_kg", p.mass_kg},
              {"drag_coeff_x", p.drag_coeff_x},
              {"drag_coeff_z", p.drag_coeff_z},
              {"area_x_m2", p.area_x_m2},
              {"area_z_m2", p.area_z_m2},
              {"thrust_max_N", p.thrust_max_n},
              {"air_density_kgpm3", p.air_density},
              {"pitch_inertia_kgm2", p.pitch_inertia},
              {"arm_m", p.arm_m},
              {"gravity_mps2", p.gravity}};
}

Json to_json(const TranscriptionConfig& c)
{
  return Json{{"scheme", scheme_name(c.scheme)},
              {"segments", c.segments},
              {"feasibility_tol", c.feasibility_tol},
              {"optimality_tol", c.optimality_tol},
              {"max_iterations", c.max_iterations},
              {"guess_seed", c.guess_seed}};
}

GpHyperparams hyper_from(const Json& j)
{
  GpHyperparams h;
  h.mean_mps = field<double>(j, "mean_mps");
  h.std_dev_mps = std::sqrt(field<double>(j, "variance_m2ps2"));
  h.length_scale_m = field<double>(j, "length_scale_m");
  return h;
}

ConvectionSpec convection_from(const Json& j)
{
  ConvectionSpec c;
  read_optional(j, "speed_mps", c.speed_mps);
  read_optional(j, "operating_length_m", c.operating_length_m);
  read_optional(j, "horizon_s", c.horizon_s);
  return c;
}

AnemometerArray anemometers_from(const Json& j)
{
  AnemometerArray a;
  a.positions_m = field<std::vector<double>>(j, "positions_m");
  a.sample_rate_hz = field<double>(j, "sample_rate_hz");
  a.noise_var = field<double>(j, "noise_var_m2ps2");
  read_optional(j, "sampling_end_s", a.sampling_end_s);
  return a;
}

BoundarySpec boundary_from(const Json& j, BoundarySpec b)
{
  if (j.contains("initial_state"))
    b.initial = state_from(j.at("initial_state"), b.initial);
  read_optional(j, "final_north_m", b.final_north_m);
  read_optional(j, "final_down_m", b.final_down_m);
  if (j.contains("terminal_box"))
    box_from(j.at("terminal_box"), b.terminal_lower.data(), b.terminal_upper.data(), kTerminalStates, 4);
  read_optional(j, "t_init_s", b.t_init_s);
  read_optional(j, "t_final_min_s", b.t_final_min_s);
  read_optional(j, "t_final_max_s", b.t_final_max_s);
  return b;
}

PathBounds bounds_from(const Json& j, PathBounds b)
{
  if (j.contains("state_box"))
    box_from(j.at("state_box"), b.lower.data(), b.upper.data(), kAllStates, kStateDim);
  read_optional(j, "thrust_max_N", b.thrust_max_n);
  return b;
}

VehicleParams vehicle_from(const Json& j, VehicleParams p)
{
  read_optional(j, "mass_kg", p.mass_kg);
  read_optional(j, "drag_coeff_x", p.drag_coeff_x);
  read_optional(j, "drag_coeff_z", p.drag_coeff_z);
  read_optional(j, "area_x_m2", p.area_x_m2);
  read_optional(j, "area_z_m2", p.area_z_m2);
  read_optional(j, "thrust_max_N", p.thrust_max_n);
  read_optional(j, "air_density_kgpm3", p.air_density);
  read_optional(j, "pitch_inertia_kgm2", p.pitch_inertia);
  read_optional(j, "arm_m", p.arm_m);
  read_optional(j, "gravity_mps2", p.gravity);
  return p;
}

TranscriptionConfig transcription_from(const Json& j, TranscriptionConfig c)
{
  if (j.contains("scheme"))
    c.scheme = scheme_from(j.at("scheme").get<std::string>());
  read_optional(j, "segments", c.segments);
  read_optional(j, "feasibility_tol", c.feasibility_tol);
  read_optional(j, "optimality_tol", c.optimality_tol);
  read_optional(j, "max_iterations", c.max_iterations);
  read_optional(j, "guess_seed", c.guess_seed);
  return c;
}

}  // namespace windplan::io

#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "windplan/kriging.hpp"
#include "windplan/ocp.hpp"
#include "windplan/windfield.hpp"

namespace windplan::io {

using Json = nlohmann::ordered_json;

/// Malformed or missing artifact.
class ArtifactError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// "%.17g": round-trips every double and is locale independent.
std::string format_double(double x);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

/// Header row plus one row per record.
struct CsvTable
{
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::string to_string() const;
  static CsvTable parse(const std::string& text);
  /// Column by header name; throws ArtifactError if absent.
  std::vector<double> column(const std::string& name) const;
};

void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

/// beta_m, delta_mps. Hyperparameters and convection go in the sidecar JSON.
CsvTable profile_table(const WindProfile& profile);
Json profile_meta(const WindProfile& profile);
WindProfile profile_from(const CsvTable& table, const Json& meta);

/// t_sec, z_m, y_mps.
CsvTable measurement_table(const MeasurementLog& log);
MeasurementLog measurements_from(const CsvTable& table);

/// Grid, posterior mean and diagonal of P; the full covariance is optional.
Json estimate_json(const WindEstimate& estimate, bool full_covariance = false);
WindEstimate estimate_from(const Json& j);

/// t_sec, pN_m, pD_m, theta_rad, ur_mps, wr_mps, q_radps, Tf_N, Tr_N.
CsvTable trajectory_table(const TrajectoryPlan& plan);
/// Solver diagnostics and plan metadata.
Json plan_diagnostics(const TrajectoryPlan& plan, double lower_bound_s);
TrajectoryPlan plan_from(const CsvTable& table, const Json& diagnostics);

Json verification_json(const VerificationReport& report);

Json to_json(const GpHyperparams& h);
Json to_json(const ConvectionSpec& c);
Json to_json(const AnemometerArray& a);
Json to_json(const BoundarySpec& b);
Json to_json(const PathBounds& b);
Json to_json(const VehicleParams& p);
Json to_json(const TranscriptionConfig& c);

GpHyperparams hyper_from(const Json& j);
ConvectionSpec convection_from(const Json& j);
AnemometerArray anemometers_from(const Json& j);
BoundarySpec boundary_from(const Json& j, BoundarySpec base = BoundarySpec::takeoff_preset());
PathBounds bounds_from(const Json& j, PathBounds base);
VehicleParams vehicle_from(const Json& j, VehicleParams base = {});
TranscriptionConfig transcription_from(const Json& j, TranscriptionConfig base = {});

}  // namespace windplan::io

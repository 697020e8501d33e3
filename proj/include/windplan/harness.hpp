#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "windplan/io.hpp"
#include "windplan/kriging.hpp"
#include "windplan/ocp.hpp"
#include "windplan/windfield.hpp"

namespace windplan {

/// One experiment: wind statistics, sensing, vehicle, problem and seeds.
struct TrialConfig
{
  int trial_id = 0;  ///< 1..6 for the preset trials, 0 for custom runs
  std::string name = "custom";
  GpHyperparams hyper;
  ConvectionSpec convection;
  Eigen::Index grid_points = 2000;
  double truncation_eta = 7.0;
  AnemometerArray anemometers;
  BoundarySpec boundary = BoundarySpec::takeoff_preset();
  PathBounds bounds = PathBounds::conservative_preset(VehicleParams{}.thrust_max_n);
  VehicleParams vehicle;
  TranscriptionConfig transcription;
  std::vector<std::uint64_t> seeds;

  /// Preset trial `id` with t_m = 30 s, |c| = 1 m/s and seeds 1..seed_count.
  static TrialConfig preset(int id, int seed_count = 20);
  /// Time the first measurement reaches the initial position, (z_1 - p_N,init)/|c|.
  double first_arrival_s() const;
  void validate() const;

  io::Json to_json() const;
  /// Starts from the preset named by "trial_id" (if 1..6), then applies every present field.
  static TrialConfig from_json(const io::Json& j);
};

struct SeedRecord
{
  std::uint64_t seed = 0;
  std::string error;  ///< empty when the pipeline completed
  Eigen::Index observations = 0;
  bool converged = false;
  bool gate_passed = false;
  double cost_s = 0.0;
  double kinematic_lower_bound_s = 0.0;
  double estimated_miss_m = 0.0;
  double final_error_m = 0.0;
  double estimate_rmse_mps = 0.0;

  /// Counted in the aggregates: converged and inside the 2 % gate.
  bool verified() const { return error.empty() && converged && gate_passed; }
};

struct TrialResult
{
  TrialConfig config;
  std::vector<SeedRecord> records;  ///< ordered as config.seeds

  int verified_count() const;
  /// Medians over verified records; nullopt if none verified.
  std::optional<double> median_cost_s() const;
  std::optional<double> median_final_error_m() const;
  std::optional<double> median_estimate_rmse_mps() const;

  io::Json to_json() const;
};

/// Everything one seed produces.
struct SeedArtifacts
{
  WindProfile profile;
  MeasurementLog log;
  std::optional<WindEstimate> estimate;
  std::optional<TrajectoryPlan> plan;
  std::optional<VerificationReport> report;
};

/// Sensor noise seed derived from the profile seed.
std::uint64_t sensor_seed(std::uint64_t seed);

/// Runs the full pipeline for one seed; errors are recorded, not thrown.
SeedRecord run_seed(const TrialConfig& cfg, std::uint64_t seed, SeedArtifacts* artifacts = nullptr);

/// Seed directory name inside a run, "seed_0007".
std::string seed_dir_name(std::uint64_t seed);

/// Runs every seed on `workers` threads (0: hardware concurrency) and writes the
/// run directory: config.json, result.json and one folder of artifacts per seed.
TrialResult run_trial(const TrialConfig& cfg, const std::filesystem::path& run_dir, unsigned workers = 0);

/// Per-seed plot panels (path, pitch, pitch_rate, velocity, thrust, wind) and a
/// gnuplot script under run_dir/plots. Throws io::ArtifactError listing missing files.
std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& run_dir);

struct RunCheck
{
  std::vector<std::string> mismatches;
  int seeds_checked = 0;
  bool ok() const { return mismatches.empty(); }
};

/// Replays every stored plan against its stored winds and compares the reports
/// and aggregates with the saved ones.
RunCheck verify_run(const std::filesystem::path& run_dir);

}  // namespace windplan

#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include <unistd.h>

#include "windplan/harness.hpp"

using namespace windplan;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const char* name)
{
  const fs::path p = fs::temp_directory_path() / ("windplan_io_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("doubles round-trip through text")
{
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 41.6964})
    CHECK(std::strtod(io::format_double(x).c_str(), nullptr) == x);
}

TEST_CASE("CSV tables")
{
  io::CsvTable t{{"t_sec", "z_m"}, {{0.1, 10.0}, {0.2, 17.5}}};
  const std::string text = t.to_string();
  CHECK(text.rfind("t_sec,z_m\n", 0) == 0);
  const io::CsvTable back = io::CsvTable::parse(text);
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  CHECK(back.column("z_m") == std::vector<double>{10.0, 17.5});
  CHECK_THROWS_AS(back.column("missing"), io::ArtifactError);
  CHECK_THROWS_AS(io::CsvTable::parse(""), io::ArtifactError);
  CHECK_THROWS_AS(io::CsvTable::parse("a,b\n1\n"), io::ArtifactError);
  CHECK_THROWS_AS(io::CsvTable::parse("a\nx\n"), io::ArtifactError);
  CHECK_THROWS_AS(io::read_text("/nonexistent/file.csv"), io::ArtifactError);
}

TEST_CASE("profile, measurement and estimate artifacts round-trip")
{
  const TrialConfig cfg = TrialConfig::preset(3, 1);
  const WindProfile p = sample_profile(cfg.hyper, cfg.convection, 300, 4);
  const WindProfile p2 = io::profile_from(io::CsvTable::parse(io::profile_table(p).to_string()),
                                          io::Json::parse(io::profile_meta(p).dump()));
  CHECK(p2.values == p.values);
  CHECK(p2.grid == p.grid);
  CHECK(p2.seed == 4);
  CHECK(p2.hyper.std_dev_mps == doctest::Approx(p.hyper.std_dev_mps).epsilon(1e-15));

  const MeasurementLog log = run_sensors(p, cfg.anemometers, 5);
  const MeasurementLog log2 = io::measurements_from(io::CsvTable::parse(io::measurement_table(log).to_string()));
  REQUIRE(log2.size() == log.size());
  CHECK(log2[7].y_mps == log[7].y_mps);

  const WindEstimate e = fit(correct_locations(log, cfg.convection, 0.6), p.grid, cfg.hyper, cfg.convection);
  const WindEstimate e2 = io::estimate_from(io::Json::parse(io::estimate_json(e).dump()));
  CHECK(e2.mean() == e.mean());
  CHECK(e2.variance() == e.variance());
  const WindEstimate e3 = io::estimate_from(io::Json::parse(io::estimate_json(e, true).dump()));
  CHECK(e3.covariance() == e.covariance());
  CHECK_THROWS_AS(io::estimate_from(io::Json{{"grid_m", {0.0, 1.0}}}), io::ArtifactError);
}

TEST_CASE("trajectory artifacts")
{
  TrajectoryPlan plan;
  plan.times = Eigen::Vector3d(5.0, 5.5, 6.0);
  plan.states = Eigen::Matrix<double, 6, Eigen::Dynamic>::Random(6, 3);
  plan.controls = Eigen::Matrix<double, 2, Eigen::Dynamic>::Random(2, 3);
  plan.t_init_s = 5.0;
  plan.cost_s = 1.0;
  plan.thrust_max_n = 41.6964;
  plan.diagnostics.converged = true;
  plan.diagnostics.iterations = 12;
  const io::CsvTable t = io::trajectory_table(plan);
  CHECK(t.header == std::vector<std::string>{"t_sec", "pN_m", "pD_m", "theta_rad", "ur_mps", "wr_mps", "q_radps",
                                             "Tf_N", "Tr_N"});
  const io::Json d = io::plan_diagnostics(plan, 0.7);
  CHECK(d.at("kinematic_lower_bound_s") == 0.7);
  const TrajectoryPlan back = io::plan_from(io::CsvTable::parse(t.to_string()), io::Json::parse(d.dump()));
  CHECK(back.states == plan.states);
  CHECK(back.controls == plan.controls);
  CHECK(back.times == plan.times);
  CHECK(back.diagnostics.converged);
  CHECK(back.diagnostics.iterations == 12);
}

TEST_CASE("trial configuration JSON")
{
  const TrialConfig cfg = TrialConfig::preset(6, 3);
  const io::Json j = cfg.to_json();
  CHECK(j.at("wind").at("variance_m2ps2") == doctest::Approx(6.0));
  CHECK(j.at("anemometers").at("noise_var_m2ps2") == 1.2);
  CHECK(j.at("boundary").at("terminal_box").at("theta_rad").at(1) == doctest::Approx(30.0 * kDegree));
  CHECK(j.at("bounds").at("state_box").at("q_radps").at(0) == doctest::Approx(-1000.0 * kDegree));

  const TrialConfig back = TrialConfig::from_json(io::Json::parse(j.dump()));
  CHECK(back.to_json() == j);

  io::Json custom = j;
  custom["trial_id"] = 0;
  custom["name"] = "custom";
  custom["vehicle"] = io::Json{{"mass_kg", 4.0}};
  custom["boundary"] = io::Json{{"terminal_box", {{"ur_mps", {-2.0, 2.0}}}}};
  custom["transcription"] = io::Json{{"segments", 40}, {"scheme", "trapezoidal"}};
  custom.erase("seeds");
  custom["seed_count"] = 4;
  const TrialConfig c = TrialConfig::from_json(custom);
  CHECK(c.vehicle.mass_kg == 4.0);
  CHECK(c.vehicle.arm_m == 0.254);
  CHECK(c.boundary.terminal_upper(1) == 2.0);
  CHECK(c.boundary.terminal_upper(0) == doctest::Approx(30.0 * kDegree));
  CHECK(c.transcription.segments == 40);
  CHECK(c.transcription.scheme == CollocationScheme::Trapezoidal);
  CHECK(c.seeds == std::vector<std::uint64_t>{1, 2, 3, 4});

  custom["transcription"] = io::Json{{"scheme", "pseudospectral"}};
  CHECK_THROWS_AS(TrialConfig::from_json(custom), io::ArtifactError);
  custom["transcription"] = io::Json{{"segments", 4}};
  CHECK_THROWS_AS(TrialConfig::from_json(custom), std::invalid_argument);
}

TEST_CASE("JSON files")
{
  const fs::path dir = scratch_dir("json");
  io::write_json(dir / "nested" / "a.json", io::Json{{"x_m", 1.5}});
  CHECK(io::read_json(dir / "nested" / "a.json").at("x_m") == 1.5);
  io::write_text(dir / "bad.json", "{");
  CHECK_THROWS_AS(io::read_json(dir / "bad.json"), io::ArtifactError);
  fs::remove_all(dir);
}

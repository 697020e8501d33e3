#include "windplan/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>

namespace windplan {

namespace fs = std::filesystem;
using io::Json;

namespace {

std::optional<double> median(std::vector<double> v)
{
  if (v.empty())
    return std::nullopt;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

/// RMS of estimate minus truth at the planned node positions and times.
double corridor_rmse(const WindEstimate& estimate, const WindProfile& profile, const TrajectoryPlan& plan)
{
  double sum = 0.0;
  int count = 0;
  for (Eigen::Index k = 0; k < plan.times.size(); ++k) {
    const double pn = plan.states(kNorth, k), t = plan.times(k);
    try {
      const double e = estimate.query_inertial(pn, t) - wind_at(profile, pn, t);
      sum += e * e;
      ++count;
    } catch (const OutOfSpanError&) {
    }
  }
  return count ? std::sqrt(sum / count) : 0.0;
}

void write_seed_artifacts(const fs::path& dir, const SeedRecord& record, const SeedArtifacts& a)
{
  fs::create_directories(dir);
  io::write_csv(dir / "profile.csv", io::profile_table(a.profile));
  io::write_json(dir / "profile.json", io::profile_meta(a.profile));
  io::write_csv(dir / "measurements.csv", io::measurement_table(a.log));
  if (a.estimate)
    io::write_json(dir / "estimate.json", io::estimate_json(*a.estimate));
  if (a.plan) {
    io::write_csv(dir / "trajectory.csv", io::trajectory_table(*a.plan));
    io::write_json(dir / "diagnostics.json", io::plan_diagnostics(*a.plan, record.kinematic_lower_bound_s));
  }
  if (a.report)
    io::write_json(dir / "verification.json", io::verification_json(*a.report));
}

Json record_json(const SeedRecord& r)
{
  return Json{{"seed", r.seed},
              {"error", r.error.empty() ? Json(nullptr) : Json(r.error)},
              {"observations", r.observations},
              {"converged", r.converged},
              {"gate_passed", r.gate_passed},
              {"verified", r.verified()},
              {"cost_s", r.cost_s},
              {"kinematic_lower_bound_s", r.kinematic_lower_bound_s},
              {"estimated_miss_m", r.estimated_miss_m},
              {"final_error_m", r.final_error_m},
              {"estimate_rmse_mps", r.estimate_rmse_mps}};
}

}  // namespace

TrialConfig TrialConfig::preset(int id, int seed_count)
{
  if (id < 1 || id > 6)
    throw std::invalid_argument("trial id must be in 1..6");
  if (seed_count < 1)
    throw std::invalid_argument("seed count must be positive");
  static constexpr double kMean[] = {4.0, 4.0, 8.0, 8.0, 12.0, 12.0};
  const bool low = id <= 2;
  const bool good_sensor = id % 2 == 1;

  TrialConfig cfg;
  cfg.trial_id = id;
  cfg.name = "trial" + std::to_string(id);
  cfg.convection = ConvectionSpec{-1.0, 40.0, 30.0};
  const double reach = std::abs(cfg.convection.speed_mps) * cfg.convection.horizon_s;
  const double mean = kMean[id - 1];
  cfg.hyper.mean_mps = mean;
  cfg.hyper.std_dev_mps = std::sqrt(low ? mean / 4.0 : mean / 2.0);
  cfg.hyper.length_scale_m = low ? reach / 10.0 : reach / 20.0;
  cfg.anemometers.positions_m = {10.0, 17.5, 25.0};
  cfg.anemometers.noise_var = good_sensor ? 0.6 : 1.2;
  cfg.anemometers.sample_rate_hz = good_sensor ? 10.0 : 2.0;
  cfg.anemometers.sampling_end_s = cfg.first_arrival_s();
  cfg.boundary.t_init_s = cfg.first_arrival_s();
  for (int s = 1; s <= seed_count; ++s)
    cfg.seeds.push_back(std::uint64_t(s));
  return cfg;
}

double TrialConfig::first_arrival_s() const
{
  if (anemometers.positions_m.empty())
    throw std::invalid_argument("anemometer array is empty");
  const double z1 = *std::min_element(anemometers.positions_m.begin(), anemometers.positions_m.end());
  return (z1 - boundary.initial(kNorth)) / std::abs(convection.speed_mps);
}

void TrialConfig::validate() const
{
  hyper.validate();
  convection.validate();
  anemometers.validate(convection);
  vehicle.validate();
  transcription.validate();
  if (grid_points < 2)
    throw std::invalid_argument("grid needs at least two points");
  if (!(truncation_eta > 0.0))
    throw std::invalid_argument("truncation parameter must be positive");
  if (seeds.empty())
    throw std::invalid_argument("no seeds");
  if (boundary.t_init_s < anemometers.sampling_end_s)
    throw std::invalid_argument("t_init precedes the end of sampling");
}

Json TrialConfig::to_json() const
{
  return Json{{"trial_id", trial_id},
              {"name", name},
              {"wind", io::to_json(hyper)},
              {"convection", io::to_json(convection)},
              {"grid_points", grid_points},
              {"truncation_eta", truncation_eta},
              {"anemometers", io::to_json(anemometers)},
              {"boundary", io::to_json(boundary)},
              {"bounds", io::to_json(bounds)},
              {"vehicle", io::to_json(vehicle)},
              {"transcription", io::to_json(transcription)},
              {"seeds", seeds}};
}

TrialConfig TrialConfig::from_json(const Json& j)
{
  const int id = j.value("trial_id", 0);
  TrialConfig cfg = id >= 1 && id <= 6 ? preset(id) : TrialConfig{};
  if (id < 1 || id > 6) {
    cfg.trial_id = 0;
    cfg.anemometers.positions_m = {10.0, 17.5, 25.0};
    cfg.seeds = {1};
  }
  cfg.name = j.value("name", cfg.name);
  if (j.contains("wind"))
    cfg.hyper = io::hyper_from(j.at("wind"));
  if (j.contains("convection"))
    cfg.convection = io::convection_from(j.at("convection"));
  cfg.grid_points = j.value("grid_points", cfg.grid_points);
  cfg.truncation_eta = j.value("truncation_eta", cfg.truncation_eta);
  if (j.contains("vehicle"))
    cfg.vehicle = io::vehicle_from(j.at("vehicle"), cfg.vehicle);
  if (j.contains("boundary"))
    cfg.boundary = io::boundary_from(j.at("boundary"), cfg.boundary);
  if (j.contains("bounds"))
    cfg.bounds = io::bounds_from(j.at("bounds"), cfg.bounds);
  else
    cfg.bounds.thrust_max_n = cfg.vehicle.thrust_max_n;
  if (j.contains("transcription"))
    cfg.transcription = io::transcription_from(j.at("transcription"), cfg.transcription);
  if (j.contains("anemometers")) {
    const Json& a = j.at("anemometers");
    cfg.anemometers = io::anemometers_from(a);
    if (!a.contains("sampling_end_s"))
      cfg.anemometers.sampling_end_s = cfg.first_arrival_s();
  }
  if (!j.contains("boundary") || !j.at("boundary").contains("t_init_s"))
    cfg.boundary.t_init_s = std::max(cfg.boundary.t_init_s, cfg.anemometers.sampling_end_s);
  if (j.contains("seeds")) {
    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  } else if (j.contains("seed_count")) {
    cfg.seeds.clear();
    for (int s = 1; s <= j.at("seed_count").get<int>(); ++s)
      cfg.seeds.push_back(std::uint64_t(s));
  }
  cfg.validate();
  return cfg;
}

int TrialResult::verified_count() const
{
  return int(std::count_if(records.begin(), records.end(), [](const SeedRecord& r) { return r.verified(); }));
}

std::optional<double> TrialResult::median_cost_s() const
{
  std::vector<double> v;
  for (const auto& r : records)
    if (r.verified())
      v.push_back(r.cost_s);
  return median(v);
}

std::optional<double> TrialResult::median_final_error_m() const
{
  std::vector<double> v;
  for (const auto& r : records)
    if (r.verified())
      v.push_back(r.final_error_m);
  return median(v);
}

std::optional<double> TrialResult::median_estimate_rmse_mps() const
{
  std::vector<double> v;
  for (const auto& r : records)
    if (r.verified())
      v.push_back(r.estimate_rmse_mps);
  return median(v);
}

Json TrialResult::to_json() const
{
  Json recs = Json::array();
  for (const auto& r : records)
    recs.push_back(record_json(r));
  return Json{{"config", config.to_json()},
              {"seed_count", records.size()},
              {"verified_count", verified_count()},
              {"median_cost_s", optional_json(median_cost_s())},
              {"median_final_error_m", optional_json(median_final_error_m())},
              {"median_estimate_rmse_mps", optional_json(median_estimate_rmse_mps())},
              {"records", std::move(recs)}};
}

std::uint64_t sensor_seed(std::uint64_t seed) { return seed * 0x9E3779B97F4A7C15ull + 0x632BE59BD9B4E019ull; }

std::string seed_dir_name(std::uint64_t seed)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "seed_%04llu", static_cast<unsigned long long>(seed));
  return buf;
}

SeedRecord run_seed(const TrialConfig& cfg, std::uint64_t seed, SeedArtifacts* artifacts)
{
  SeedArtifacts local;
  SeedArtifacts& a = artifacts ? *artifacts : local;
  SeedRecord r;
  r.seed = seed;
  std::string stage = "sampling";
  try {
    a.profile = sample_profile(cfg.hyper, cfg.convection, cfg.grid_points, seed);
    a.log = run_sensors(a.profile, cfg.anemometers, sensor_seed(seed));

    stage = "estimation";
    const ObservationSet obs =
        truncate(correct_locations(a.log, cfg.convection, cfg.anemometers.noise_var), cfg.boundary.t_init_s,
                 cfg.convection, cfg.truncation_eta, cfg.hyper.length_scale_m);
    r.observations = obs.size();
    a.estimate.emplace(fit(obs, a.profile.grid, cfg.hyper, cfg.convection));

    stage = "planning";
    const WindFunction planning_wind = as_wind_function(*a.estimate, SpanPolicy::Clamp);
    r.kinematic_lower_bound_s =
        transcribe(cfg.boundary, cfg.bounds, planning_wind, cfg.vehicle, cfg.transcription).kinematic_lower_bound();
    a.plan.emplace(plan_trajectory(cfg.boundary, cfg.bounds, planning_wind, cfg.vehicle, cfg.transcription));
    r.converged = a.plan->diagnostics.converged;
    r.cost_s = a.plan->cost_s;
    r.estimate_rmse_mps = corridor_rmse(*a.estimate, a.profile, *a.plan);

    stage = "verification";
    a.report.emplace(verify(*a.plan, as_wind_function(*a.estimate), as_wind_function(a.profile), cfg.vehicle));
    r.gate_passed = a.report->passed;
    r.estimated_miss_m = a.report->estimated_miss_m;
    r.final_error_m = a.report->final_error_m;
  } catch (const std::exception& e) {
    r.error = stage + ": " + e.what();
  }
  return r;
}

TrialResult run_trial(const TrialConfig& cfg, const fs::path& run_dir, unsigned workers)
{
  cfg.validate();
  fs::create_directories(run_dir);
  io::write_json(run_dir / "config.json", cfg.to_json());

  TrialResult result;
  result.config = cfg;
  result.records.resize(cfg.seeds.size());
  if (workers == 0)
    workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, unsigned(cfg.seeds.size()));

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) {
      SeedArtifacts a;
      SeedRecord r = run_seed(cfg, cfg.seeds[i], &a);
      try {
        write_seed_artifacts(run_dir / seed_dir_name(r.seed), r, a);
      } catch (const std::exception& e) {
        if (r.error.empty())
          r.error = std::string("artifacts: ") + e.what();
      }
      result.records[i] = std::move(r);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w)
    pool.emplace_back(work);
  work();
  for (auto& t : pool)
    t.join();

  io::write_json(run_dir / "result.json", result.to_json());
  return result;
}

namespace {

struct StoredSeed
{
  WindProfile profile;
  WindEstimate estimate;
  TrajectoryPlan plan;
  Json diagnostics;
  Json verification;
};

StoredSeed load_seed(const fs::path& dir)
{
  std::vector<std::string> missing;
  for (const char* f :
       {"profile.csv", "profile.json", "estimate.json", "trajectory.csv", "diagnostics.json", "verification.json"})
    if (!fs::exists(dir / f))
      missing.push_back((dir / f).string());
  if (!missing.empty()) {
    std::string msg = "missing artifacts:";
    for (const auto& m : missing)
      msg += " " + m;
    throw io::ArtifactError(msg);
  }
  const Json diagnostics = io::read_json(dir / "diagnostics.json");
  return StoredSeed{io::profile_from(io::read_csv(dir / "profile.csv"), io::read_json(dir / "profile.json")),
                    io::estimate_from(io::read_json(dir / "estimate.json")),
                    io::plan_from(io::read_csv(dir / "trajectory.csv"), diagnostics), diagnostics,
                    io::read_json(dir / "verification.json")};
}

std::vector<std::uint64_t> stored_seeds(const fs::path& run_dir)
{
  if (!fs::exists(run_dir / "config.json") || !fs::exists(run_dir / "result.json"))
    throw io::ArtifactError("missing artifacts: " + (run_dir / "config.json").string() + " " +
                            (run_dir / "result.json").string());
  return io::read_json(run_dir / "config.json").at("seeds").get<std::vector<std::uint64_t>>();
}

io::CsvTable panel(std::vector<std::string> header) { return io::CsvTable{std::move(header), {}}; }

double interp(const Eigen::VectorXd& t, const Eigen::VectorXd& y, double x)
{
  const Eigen::Index n = t.size();
  if (x <= t(0))
    return y(0);
  if (x >= t(n - 1))
    return y(n - 1);
  const Eigen::Index k = Eigen::Index(std::upper_bound(t.data(), t.data() + n, x) - t.data()) - 1;
  const double s = (x - t(k)) / (t(k + 1) - t(k));
  return y(k) + s * (y(k + 1) - y(k));
}

const char* kGnuplotStub = R"(# gnuplot -e "seed='seed_0001'" plot.gp
if (!exists("seed")) seed = 'seed_0001'
set datafile separator ','
set key autotitle columnhead
set terminal pngcairo size 1200,900
set output seed.'.png'
set multiplot layout 3,2
set title 'vertical-plane path'; set yrange [*:*] reverse
plot seed.'_path.csv' using 2:3 with lines, '' using 4:5 with lines, '' using 6:7 with lines
set yrange [*:*] noreverse
set title 'pitch'; plot seed.'_pitch.csv' using 1:2 with lines, '' using 1:3 with lines
set title 'pitch rate'; plot seed.'_pitch_rate.csv' using 1:2 with lines, '' using 1:3 with lines
set title 'flow-relative velocity'; plot for [i=2:5] seed.'_velocity.csv' using 1:i with lines
set title 'thrust'; plot seed.'_thrust.csv' using 1:2 with lines, '' using 1:3 with lines
set title 'north wind along path'; plot seed.'_wind.csv' using 1:2 with lines, '' using 1:3 with lines
unset multiplot
)";

}  // namespace

std::vector<fs::path> emit_plots(const fs::path& run_dir)
{
  const auto seeds = stored_seeds(run_dir);
  const fs::path out = run_dir / "plots";
  std::vector<fs::path> written;
  for (const std::uint64_t seed : seeds) {
    const fs::path dir = run_dir / seed_dir_name(seed);
    if (!fs::exists(dir / "trajectory.csv"))
      continue;
    const StoredSeed s = load_seed(dir);
    const VehicleParams vehicle = io::vehicle_from(io::read_json(run_dir / "config.json").at("vehicle"));
    const WindFunction est = as_wind_function(s.estimate), truth = as_wind_function(s.profile);
    const VerificationReport rep = verify(s.plan, est, truth, vehicle);
    const ControlSchedule control = control_schedule(s.plan, ControlInterpolation::Linear);

    auto path = panel({"t_sec", "planned_pN_m", "planned_pD_m", "estimated_pN_m", "estimated_pD_m", "actual_pN_m",
                       "actual_pD_m"});
    auto pitch = panel({"t_sec", "planned_theta_deg", "actual_theta_deg"});
    auto rate = panel({"t_sec", "planned_q_degps", "actual_q_degps"});
    auto vel = panel({"t_sec", "planned_ur_mps", "planned_wr_mps", "actual_ur_mps", "actual_wr_mps"});
    auto thrust = panel({"t_sec", "Tf_N", "Tr_N"});
    auto wind = panel({"t_sec", "estimated_wind_mps", "true_wind_mps"});
    const double deg = 1.0 / kDegree;
    for (std::size_t i = 0; i < rep.true_replay.times.size(); ++i) {
      const double t = rep.true_replay.times[i];
      const QuadState& xa = rep.true_replay.states[i];
      const QuadState& xe = rep.estimated_replay.states[i];
      QuadState xp;
      for (int j = 0; j < kStateDim; ++j)
        xp(j) = interp(s.plan.times, s.plan.states.row(j).transpose(), t);
      const ControlInput u = control(t);
      path.rows.push_back({t, xp(kNorth), xp(kDown), xe(kNorth), xe(kDown), xa(kNorth), xa(kDown)});
      pitch.rows.push_back({t, xp(kPitch) * deg, xa(kPitch) * deg});
      rate.rows.push_back({t, xp(kPitchRate) * deg, xa(kPitchRate) * deg});
      vel.rows.push_back({t, xp(kSurge), xp(kHeave), xa(kSurge), xa(kHeave)});
      thrust.rows.push_back({t, u(0), u(1)});
      wind.rows.push_back({t, est(xp(kNorth), t), truth(xp(kNorth), t)});
    }
    const std::string stem = seed_dir_name(seed);
    for (const auto& [name, table] : {std::pair{"path", &path}, {"pitch", &pitch}, {"pitch_rate", &rate},
                                      {"velocity", &vel}, {"thrust", &thrust}, {"wind", &wind}}) {
      const fs::path p = out / (stem + "_" + name + ".csv");
      io::write_csv(p, *table);
      written.push_back(p);
    }
  }
  if (written.empty())
    throw io::ArtifactError("missing artifacts: no seed directory in " + run_dir.string() + " holds a trajectory");
  io::write_text(out / "plot.gp", kGnuplotStub);
  written.push_back(out / "plot.gp");
  return written;
}

RunCheck verify_run(const fs::path& run_dir)
{
  RunCheck check;
  const auto seeds = stored_seeds(run_dir);
  const Json config = io::read_json(run_dir / "config.json");
  const Json result = io::read_json(run_dir / "result.json");
  const VehicleParams vehicle = io::vehicle_from(config.at("vehicle"));
  const Json& records = result.at("records");

  auto differs = [](double a, double b) { return std::abs(a - b) > 1e-9 * std::max(1.0, std::abs(b)); };
  std::vector<double> costs, errors;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const std::string name = seed_dir_name(seeds[i]);
    const Json& rec = records.at(i);
    if (!rec.at("error").is_null()) {
      if (rec.at("verified").get<bool>())
        check.mismatches.push_back(name + ": failed seed marked verified");
      continue;
    }
    StoredSeed s = load_seed(run_dir / name);
    ++check.seeds_checked;
    const VerificationReport rep = verify(s.plan, as_wind_function(s.estimate), as_wind_function(s.profile), vehicle);
    if (rep.passed != s.verification.at("passed").get<bool>())
      check.mismatches.push_back(name + ": gate outcome differs from the stored report");
    if (differs(rep.final_error_m, s.verification.at("final_error_m").get<double>()))
      check.mismatches.push_back(name + ": final error differs from the stored report");
    if (differs(rep.estimated_miss_m, s.verification.at("estimated_miss_m").get<double>()))
      check.mismatches.push_back(name + ": estimated-wind miss differs from the stored report");
    const bool verified = s.plan.diagnostics.converged && rep.passed;
    if (verified != rec.at("verified").get<bool>())
      check.mismatches.push_back(name + ": verified flag differs from result.json");
    if (verified) {
      costs.push_back(s.plan.cost_s);
      errors.push_back(rep.final_error_m);
    }
  }
  auto compare = [&](const char* key, const std::optional<double>& v) {
    const Json& stored = result.at(key);
    if (stored.is_null() != !v.has_value() || (v && differs(*v, stored.get<double>())))
      check.mismatches.push_back(std::string("result.json ") + key + " does not match the seed artifacts");
  };
  compare("median_cost_s", median(costs));
  compare("median_final_error_m", median(errors));
  if (result.at("verified_count").get<int>() != int(costs.size()))
    check.mismatches.push_back("result.json verified_count does not match the seed artifacts");
  return check;
}

}  // namespace windplan

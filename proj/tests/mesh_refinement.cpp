// Doubling the segment count moves the converged final time by less than 1 % on
// one realization (seed 1) of every trial.

#include <cmath>
#include <cstdio>

#include "windplan/harness.hpp"

using namespace windplan;

int main()
{
  bool ok = true;
  for (int id = 1; id <= 6; ++id) {
    const TrialConfig cfg = TrialConfig::preset(id, 1);
    for (const std::uint64_t seed : cfg.seeds) {
      const WindProfile profile = sample_profile(cfg.hyper, cfg.convection, cfg.grid_points, seed);
      const ObservationSet obs = truncate(
          correct_locations(run_sensors(profile, cfg.anemometers, sensor_seed(seed)), cfg.convection,
                            cfg.anemometers.noise_var),
          cfg.boundary.t_init_s, cfg.convection, cfg.truncation_eta, cfg.hyper.length_scale_m);
      const WindFunction wind =
          as_wind_function(fit(obs, profile.grid, cfg.hyper, cfg.convection), SpanPolicy::Clamp);

      TranscriptionConfig fine = cfg.transcription;
      fine.segments *= 2;
      const TrajectoryPlan a = plan_trajectory(cfg.boundary, cfg.bounds, wind, cfg.vehicle, cfg.transcription);
      const TrajectoryPlan b = plan_trajectory(cfg.boundary, cfg.bounds, wind, cfg.vehicle, fine);
      const double change = std::abs(b.t_final_s() - a.t_final_s()) / a.t_final_s();
      const bool pass = a.diagnostics.converged && b.diagnostics.converged && change < 0.01;
      ok = ok && pass;
      std::printf("[%s] trial %d seed %llu: K=%d t_final %.5f s, K=%d t_final %.5f s, change %.3f %%\n",
                  pass ? "PASS" : "FAIL", id, static_cast<unsigned long long>(seed), cfg.transcription.segments,
                  a.t_final_s(), fine.segments, b.t_final_s(), 100.0 * change);
      std::fflush(stdout);
    }
  }
  return ok ? 0 : 1;
}

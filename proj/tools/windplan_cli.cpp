#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "windplan/harness.hpp"

namespace fs = std::filesystem;
using namespace windplan;

namespace {

fs::path default_root()
{
  const char* env = std::getenv("WINDPLAN_OUT");
  return env && *env ? fs::path(env) : fs::path("runs");
}

void print_summary(const TrialResult& r, const fs::path& dir)
{
  std::printf("%s: %d/%zu seeds verified\n", r.config.name.c_str(), r.verified_count(), r.records.size());
  for (const auto& rec : r.records) {
    if (!rec.error.empty())
      std::printf("  seed %llu  error: %s\n", static_cast<unsigned long long>(rec.seed), rec.error.c_str());
    else
      std::printf("  seed %llu  cost %.4f s  bound %.4f s  final error %.3f m  converged %d  gate %d\n",
                  static_cast<unsigned long long>(rec.seed), rec.cost_s, rec.kinematic_lower_bound_s,
                  rec.final_error_m, int(rec.converged), int(rec.gate_passed));
  }
  if (const auto c = r.median_cost_s())
    std::printf("median cost %.4f s  median final error %.3f m  median estimate rmse %.3f m/s\n", *c,
                *r.median_final_error_m(), *r.median_estimate_rmse_mps());
  std::printf("wrote %s\n", dir.string().c_str());
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Minimum-time quadrotor take-off planning in a Kriged wind field"};
  app.require_subcommand(1);

  int trial = 0;
  int seeds = 20;
  std::string config_file;
  std::string out;
  unsigned jobs = 0;
  auto* run = app.add_subcommand("run", "Run a trial preset or a JSON configuration");
  auto* trial_opt = run->add_option("--trial", trial, "Preset trial 1..6")->check(CLI::Range(1, 6));
  auto* config_opt = run->add_option("--config", config_file, "Trial configuration JSON")->check(CLI::ExistingFile);
  trial_opt->excludes(config_opt);
  auto* seeds_opt = run->add_option("--seeds", seeds, "Number of seeds (preset runs)")->check(CLI::PositiveNumber);
  seeds_opt->needs(trial_opt);
  run->add_option("--out", out, "Output root (default $WINDPLAN_OUT or ./runs)");
  run->add_option("--jobs", jobs, "Worker threads (0: all cores)");

  std::string run_dir;
  auto* plots = app.add_subcommand("plots", "Write plot panels for a finished run");
  plots->add_option("--run", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  auto* check = app.add_subcommand("verify", "Recompute a finished run and compare with its results");
  check->add_option("--run", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      if (!*trial_opt && !*config_opt)
        throw CLI::RequiredError("--trial or --config");
      const TrialConfig cfg = *trial_opt ? TrialConfig::preset(trial, seeds)
                                         : TrialConfig::from_json(io::read_json(config_file));
      const fs::path dir = (out.empty() ? default_root() : fs::path(out)) / cfg.name;
      print_summary(run_trial(cfg, dir, jobs), dir);
      return 0;
    }
    if (plots->parsed()) {
      for (const auto& p : emit_plots(run_dir))
        std::printf("%s\n", p.string().c_str());
      return 0;
    }
    const RunCheck result = verify_run(run_dir);
    for (const auto& m : result.mismatches)
      std::printf("mismatch: %s\n", m.c_str());
    std::printf("%d seeds checked, %zu mismatches\n", result.seeds_checked, result.mismatches.size());
    return result.ok() ? 0 : 1;
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

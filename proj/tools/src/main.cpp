#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "recipe.hpp"

using namespace oddm;

int main(int argc, char** argv) {
  CLI::App app{"delay-Doppler modem: Monte Carlo runs, closed-form BER, "
               "self-checks"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string recipe_arg, out_csv, ebn0_spec, detector;
  std::uint64_t seed = 0;
  long max_frames = 0, min_frame_errors = 0;
  int threads = 0;

  auto add_overrides = [&](CLI::App* sub) {
    struct Opts {
      CLI::Option *seed, *ebn0, *detector, *max_frames, *min_fe, *threads;
    } o;
    o.seed = sub->add_option("--seed", seed, "RNG seed override");
    o.ebn0 = sub->add_option("--ebn0", ebn0_spec,
                             "Eb/N0 grid: 'a' or 'a:b:step' in dB");
    o.detector =
        sub->add_option("--detector", detector, "detector for every system")
            ->check(CLI::IsMember({"ml", "mmse", "sicmmse"}));
    o.max_frames = sub->add_option("--max-frames", max_frames,
                                   "frame budget per grid point")
                       ->check(CLI::PositiveNumber);
    o.min_fe = sub->add_option("--min-frame-errors", min_frame_errors,
                               "frame errors to stop at")
                   ->check(CLI::PositiveNumber);
    o.threads = sub->add_option("--threads", threads, "worker threads")
                    ->envname("ODDM_THREADS")
                    ->check(CLI::PositiveNumber);
    return [&, o]() {
      Overrides ov;
      if (o.seed->count()) ov.seed = seed;
      if (o.ebn0->count()) ov.ebn0_grid_db = parse_ebn0_range(ebn0_spec);
      if (o.detector->count()) ov.detector = detector;
      if (o.max_frames->count()) ov.max_frames = max_frames;
      if (o.min_fe->count()) ov.min_frame_errors = min_frame_errors;
      if (o.threads->count()) ov.threads = threads;
      return ov;
    };
  };

  CLI::App* run = app.add_subcommand("run", "Monte Carlo BER sweep");
  run->add_option("--recipe", recipe_arg, "preset name or recipe file")
      ->required();
  run->add_option("--out", out_csv, "output CSV path (meta sidecar next to it)")
      ->required();
  auto run_overrides = add_overrides(run);

  double at_db = 0.0;
  bool rho_search = false;
  CLI::App* analyze =
      app.add_subcommand("analyze", "closed-form BER without simulation");
  analyze->add_option("--recipe", recipe_arg, "preset name or recipe file");
  analyze->add_option("--out", out_csv, "output CSV path");
  CLI::Option* at_opt =
      analyze->add_option("--at", at_db, "print the BER at one Eb/N0 in dB");
  analyze->add_flag("--rho-search", rho_search,
                    "report the best scaling factor per published setup");
  auto analyze_overrides = add_overrides(analyze);

  bool verbose = false, corrupt = false;
  CLI::App* selftest =
      app.add_subcommand("selftest", "cross-check independent formulations");
  selftest->add_flag("--verbose", verbose, "print measured errors and tolerances");
  selftest->add_flag("--corrupt-constellation", corrupt,
                     "inject a table fault (the suite must then fail)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed()) {
      Recipe recipe = load_recipe(recipe_arg);
      apply_overrides(recipe, run_overrides());
      return cmd_run(recipe, out_csv);
    }
    if (analyze->parsed()) {
      AnalyzeOptions opt;
      opt.rho_search = rho_search;
      if (at_opt->count()) opt.at_ebn0_db = at_db;
      opt.out_csv = out_csv;
      if (rho_search) return cmd_analyze(Recipe{}, opt);
      if (recipe_arg.empty())
        throw ConfigError("analyze: --recipe is required without --rho-search");
      if (!opt.at_ebn0_db && out_csv.empty())
        throw ConfigError("analyze: need --out (curve) or --at (single point)");
      Recipe recipe = load_recipe(recipe_arg);
      apply_overrides(recipe, analyze_overrides());
      return cmd_analyze(recipe, opt);
    }
    SelftestOptions opt;
    opt.verbose = verbose;
    opt.corrupt_constellation = corrupt;
    return cmd_selftest(opt);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}

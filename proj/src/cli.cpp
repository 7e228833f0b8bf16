#include "panotrack/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <optional>
#include <stdexcept>

#include "CLI11.hpp"
#include "panotrack/runner.hpp"

namespace panotrack {
namespace {

struct CliArgs {
  std::string scenario_path;
  std::string out_dir;
  std::vector<std::string> mode_names;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  int frames = -1;
  int reps = 1;
  bool dump_scans = false;
};

void add_scenario_flags(CLI::App* cmd, CliArgs& a, bool with_modes) {
  cmd->add_option("--scenario", a.scenario_path, "scenario JSON file")->required();
  cmd->add_option("--override", a.overrides,
                  "dotted.path=value tweak applied before validation (repeatable)");
  cmd->add_option("--seed", a.seed, "replace the scenario seed");
  if (with_modes)
    cmd->add_option("--modes", a.mode_names, "tracker modes to run (comma separated)")
        ->delimiter(',');
}

Scenario load_with_flags(const CliArgs& a) {
  std::vector<std::string> overrides = a.overrides;
  if (a.seed) overrides.push_back("seed=" + std::to_string(*a.seed));
  Scenario s = load_scenario(a.scenario_path, overrides);
  if (!a.mode_names.empty()) {
    s.modes.clear();
    for (const std::string& name : a.mode_names) s.modes.push_back(mode_from_name(name));
    s.validate();
  }
  return s;
}

int do_track(const CliArgs& a) {
  const Scenario scenario = load_with_flags(a);
  RunSettings settings;
  settings.frame_limit = a.frames;
  if (a.dump_scans) settings.dump_dir = a.out_dir;

  const ScenarioRun run = run_scenario(scenario, settings);
  write_run_artifacts(run, a.out_dir);

  bool no_init = false;
  for (const ModeOutcome& o : run.outcomes) {
    if (!o.initialized) {
      std::fprintf(stderr, "no-init: mode %s never initialized over %zu frames\n",
                   mode_name(o.mode), o.run.frame_ms.size());
      no_init = true;
    }
  }
  if (!run.comparison.empty()) std::fputs(run.comparison.c_str(), stdout);
  std::printf("artifacts written to %s\n", a.out_dir.c_str());
  return no_init ? 3 : 0;
}

int do_gen(const CliArgs& a) {
  const Scenario scenario = load_with_flags(a);
  run_generate(scenario, a.out_dir, a.frames);
  std::printf("scans written to %s\n", a.out_dir.c_str());
  return 0;
}

int do_bench(const CliArgs& a) {
  const Scenario scenario = load_with_flags(a);
  const std::vector<BenchOutcome> outcomes = run_benchmark(scenario, a.frames, a.reps);
  write_bench_artifacts(outcomes, scenario, a.frames, a.reps, a.out_dir);
  for (const BenchOutcome& o : outcomes)
    std::printf("%-12s mean %8.3f ms   p95 %8.3f ms   %8.2f fps\n", mode_name(o.mode),
                o.aggregate.mean_frame_ms, o.aggregate.p95_frame_ms,
                o.aggregate.effective_fps);
  return 0;
}

int do_report(const CliArgs& a) {
  recompute_reports(a.out_dir);
  std::printf("reports rebuilt in %s\n", a.out_dir.c_str());
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"panoramic LiDAR target tracking toolkit"};
  app.require_subcommand(1);

  CliArgs track_args, gen_args, bench_args, report_args;

  CLI::App* track = app.add_subcommand("track", "run trackers over a scenario, write artifacts");
  add_scenario_flags(track, track_args, true);
  track->add_option("--out", track_args.out_dir, "output directory")->required();
  track->add_option("--frames", track_args.frames, "cap the number of scans");
  track->add_flag("--dump-scans", track_args.dump_scans, "also dump every scan as binary");

  CLI::App* gen = app.add_subcommand("gen", "render scans and ground truth only");
  add_scenario_flags(gen, gen_args, false);
  gen->add_option("--out", gen_args.out_dir, "output directory")->required();
  gen->add_option("--frames", gen_args.frames, "cap the number of scans");

  CLI::App* bench = app.add_subcommand("bench", "time tracker throughput on synthetic scans");
  add_scenario_flags(bench, bench_args, true);
  bench->add_option("--out", bench_args.out_dir, "output directory")->required();
  bench->add_option("--frames", bench_args.frames, "frames per repetition (>= 100)");
  bench_args.frames = 300;
  bench->add_option("--reps", bench_args.reps, "number of repetitions");

  CLI::App* report = app.add_subcommand("report", "recompute metrics from existing CSVs");
  report->add_option("--out", report_args.out_dir, "directory holding gt.csv and trajectories")
      ->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (track->parsed()) return do_track(track_args);
    if (gen->parsed()) return do_gen(gen_args);
    if (bench->parsed()) return do_bench(bench_args);
    if (report->parsed()) return do_report(report_args);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}

}  // namespace panotrack

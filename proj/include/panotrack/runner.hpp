#pragma once

#include <string>
#include <vector>

#include "panotrack/metrics.hpp"
#include "panotrack/scenario.hpp"
#include "panotrack/tracker.hpp"

namespace panotrack {

struct TimingStats {
  double mean_frame_ms = 0.0;
  double p95_frame_ms = 0.0;
  double effective_fps = 0.0;  // 1000 / mean_frame_ms
};

TimingStats timing_from(const std::vector<double>& frame_ms);

struct RunSettings {
  int frame_limit = -1;  // cap on rendered scans, -1 runs the whole flight
  std::string dump_dir;  // when set, every scan is also dumped here as binary
  int threads = 0;       // pipeline width; 0 reads PANO_TRACK_THREADS
};

struct ModeOutcome {
  TrackerMode mode = TrackerMode::kFused;
  TrackRun run;
  bool initialized = false;
  bool evaluated = false;  // report holds real numbers
  ErrorReport report;
  TimingStats timing;
};

struct ScenarioRun {
  Scenario scenario;
  std::vector<GroundTruthSample> gt;  // dense truth at the trajectory sample rate
  std::vector<ModeOutcome> outcomes;  // one per configured mode, scenario order
  std::string comparison;             // empty until two modes have reports
};

// The hand-entered starting fix the point-cloud-only protocol relies on is
// never exact; this is the deterministic per-seed error we add to the truth.
Point3 manual_init_offset(std::uint64_t seed);

// Renders the flight and runs every configured mode over the same scan stream
// in lockstep. Scan synthesis runs on worker threads (bounded reorder window,
// frames delivered in order); trackers always run on the calling thread, so
// results do not depend on the thread count. Throws std::invalid_argument on
// a bad scenario; a mode that never initializes is reported, not thrown.
ScenarioRun run_scenario(const Scenario& scenario, const RunSettings& settings = {});

// Writes gt.csv, traj_<mode>.csv, report_<mode>.json, comparison.txt, and
// timing.json into out_dir, creating it if needed. Identical runs produce
// byte-identical CSVs; timing.json carries wall-clock numbers and is exempt.
void write_run_artifacts(const ScenarioRun& run, const std::string& out_dir);

// Scan-only front end: renders frame_limit scans (the whole flight when -1),
// dumping each as binary plus the dense truth CSV.
void run_generate(const Scenario& scenario, const std::string& out_dir, int frame_limit = -1,
                  int threads = 0);

struct BenchOutcome {
  TrackerMode mode = TrackerMode::kFused;
  std::vector<TimingStats> repetitions;
  TimingStats aggregate;  // over every frame of every repetition
};

// Times tracker consumption only; rendering happens outside the measured
// section. Frames past the flight's end hover at the final pose. Requires
// n_frames >= 100 and repetitions >= 1.
std::vector<BenchOutcome> run_benchmark(const Scenario& scenario, int n_frames, int repetitions,
                                        int threads = 0);

void write_bench_artifacts(const std::vector<BenchOutcome>& outcomes, const Scenario& scenario,
                           int n_frames, int repetitions, const std::string& out_dir);

// Binary scan dump: 16-byte header (magic "PANO", version u16, rows u16,
// cols u32, frame_index u32), then row-major (range f32, signal f32, valid u8)
// per pixel. Points are rebuilt on load from the bin-center rays, and the
// timestamp from frame_index / frame_rate.
void dump_scan(const PanoramicScan& scan, const std::string& path);
PanoramicScan load_scan_dump(const std::string& path, const SensorIntrinsics& intr);

// CSV artifact readers, strict about headers and field counts.
std::vector<GroundTruthSample> read_gt_csv(const std::string& path);
Trajectory read_traj_csv(const std::string& path);

// Rebuilds report_<mode>.json and comparison.txt from the CSV artifacts in
// dir, pulling per-mode throughput from timing.json when present.
void recompute_reports(const std::string& dir);

}  // namespace panotrack

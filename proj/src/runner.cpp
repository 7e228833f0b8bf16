#include "panotrack/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "panotrack/rng.hpp"
#include "panotrack/sim.hpp"

namespace panotrack {
namespace {

using nlohmann::json;

constexpr double kManualInitError = 0.25;  // m, see manual_init_offset

int resolve_threads(int requested) {
  int n = requested;
  if (n <= 0) {
    if (const char* env = std::getenv("PANO_TRACK_THREADS")) n = std::atoi(env);
  }
  if (n <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    n = hw >= 2 ? 2 : 1;
  }
  return std::clamp(n, 1, 16);
}

int total_frames(const Scenario& s) {
  return static_cast<int>(s.trajectory.duration * s.sensor.frame_rate) + 1;
}

// Renders frames [0, n) on worker threads and hands them to consume in strict
// frame order on the calling thread. The reorder window bounds memory; the
// worker holding the next expected frame can always deposit it, so the window
// cannot deadlock. consume failures stop the workers before rethrowing.
void render_pipeline(const ScanRenderer& renderer, const TrajectorySpec& traj, int n_frames,
                     double frame_rate, int threads,
                     const std::function<void(PanoramicScan&&)>& consume) {
  if (n_frames <= 0) return;

  if (threads <= 1) {
    for (int k = 0; k < n_frames; ++k) {
      const double t = k / frame_rate;
      consume(renderer.render(trajectory_at(traj, t), static_cast<std::uint32_t>(k), t));
    }
    return;
  }

  const int workers = threads - 1;
  const int window = 2 * workers + 2;
  std::mutex mu;
  std::condition_variable cv_space, cv_ready;
  std::map<int, PanoramicScan> ready;
  std::atomic<int> claim{0};
  int expected = 0;
  bool abort = false;
  std::exception_ptr worker_error;

  auto work = [&] {
    try {
      for (;;) {
        const int idx = claim.fetch_add(1);
        if (idx >= n_frames) return;
        const double t = idx / frame_rate;
        PanoramicScan scan =
            renderer.render(trajectory_at(traj, t), static_cast<std::uint32_t>(idx), t);
        std::unique_lock<std::mutex> lk(mu);
        cv_space.wait(lk, [&] { return abort || idx < expected + window; });
        if (abort) return;
        ready.emplace(idx, std::move(scan));
        cv_ready.notify_all();
      }
    } catch (...) {
      std::lock_guard<std::mutex> lk(mu);
      if (!worker_error) worker_error = std::current_exception();
      abort = true;
      cv_ready.notify_all();
      cv_space.notify_all();
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int i = 0; i < workers; ++i) pool.emplace_back(work);

  auto shutdown = [&] {
    {
      std::lock_guard<std::mutex> lk(mu);
      abort = true;
    }
    cv_space.notify_all();
    cv_ready.notify_all();
    for (std::thread& th : pool) th.join();
  };

  try {
    while (expected < n_frames) {
      PanoramicScan scan;
      {
        std::unique_lock<std::mutex> lk(mu);
        cv_ready.wait(lk, [&] { return abort || ready.count(expected) > 0; });
        if (abort) break;
        auto it = ready.find(expected);
        scan = std::move(it->second);
        ready.erase(it);
      }
      consume(std::move(scan));
      {
        std::lock_guard<std::mutex> lk(mu);
        ++expected;
      }
      cv_space.notify_all();
    }
  } catch (...) {
    shutdown();
    throw;
  }
  shutdown();
  if (worker_error) std::rethrow_exception(worker_error);
}

Detector make_detector(const Scenario& s) {
  Detector detector(s.detector, s.sensor);
  detector.bind_truth(
      [spec = s.trajectory](double t) -> std::optional<GroundTruthSample> {
        return trajectory_at(spec, t);
      },
      s.scene.uav);
  return detector;
}

std::vector<std::unique_ptr<SequenceTracker>> make_trackers(const Scenario& s,
                                                            const Detector& detector) {
  const Point3 manual =
      trajectory_at(s.trajectory, 0.0).position + manual_init_offset(s.seed);
  std::vector<std::unique_ptr<SequenceTracker>> trackers;
  trackers.reserve(s.modes.size());
  for (TrackerMode m : s.modes)
    trackers.push_back(std::make_unique<SequenceTracker>(
        m, detector, s.tracker,
        m == TrackerMode::kPcdOnly ? std::optional<Point3>(manual) : std::nullopt));
  return trackers;
}

void append_csv_num(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  out += buf;
}

std::string gt_csv_text(const std::vector<GroundTruthSample>& gt) {
  std::string text = "t,x,y,z,vx,vy,vz\n";
  for (const GroundTruthSample& g : gt) {
    const double vals[7] = {g.t, g.position.x, g.position.y, g.position.z,
                            g.velocity.x, g.velocity.y, g.velocity.z};
    for (int i = 0; i < 7; ++i) {
      if (i) text += ',';
      append_csv_num(text, vals[i]);
    }
    text += '\n';
  }
  return text;
}

std::string traj_csv_text(const std::vector<PoseEstimate>& poses) {
  std::string text = "t,x,y,z,vx,vy,vz,source,cluster_count\n";
  for (const PoseEstimate& p : poses) {
    const double vals[7] = {p.t, p.position.x, p.position.y, p.position.z,
                            p.velocity.x, p.velocity.y, p.velocity.z};
    for (int i = 0; i < 7; ++i) {
      if (i) text += ',';
      append_csv_num(text, vals[i]);
    }
    text += p.source == PoseSource::kMeasured ? ",measured," : ",predicted,";
    text += std::to_string(p.cluster_count);
    text += '\n';
  }
  return text;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("short write on " + path);
}

json axis_json(const AxisStats& a) {
  return json{{"mean", a.mean}, {"rmse", a.rmse}, {"max", a.max},
              {"q25", a.q25},   {"q50", a.q50},   {"q75", a.q75}};
}

json report_json(const ErrorReport& r) {
  return json{{"total", {{"mean", r.total_mean}, {"rmse", r.total_rmse}}},
              {"x", axis_json(r.x)},
              {"y", axis_json(r.y)},
              {"z", axis_json(r.z)},
              {"velocity",
               {{"x", axis_json(r.vx)}, {"y", axis_json(r.vy)}, {"z", axis_json(r.vz)}}},
              {"n_paired", r.n_paired},
              {"measured_fraction", r.measured_fraction},
              {"detectable_distance", r.detectable_distance}};
}

json timing_json(const TimingStats& t) {
  return json{{"mean_frame_ms", t.mean_frame_ms},
              {"p95_frame_ms", t.p95_frame_ms},
              {"effective_fps", t.effective_fps}};
}

std::string scan_file_name(std::uint32_t frame_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scan_%06u.bin", frame_index);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t begin = 0;
  while (true) {
    const std::size_t comma = line.find(',', begin);
    fields.push_back(line.substr(begin, comma - begin));
    if (comma == std::string::npos) return fields;
    begin = comma + 1;
  }
}

double parse_num(const std::string& field, const std::string& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(path + ": bad numeric field \"" + field + "\"");
  }
}

}  // namespace

TimingStats timing_from(const std::vector<double>& frame_ms) {
  TimingStats t;
  if (frame_ms.empty()) return t;
  double sum = 0.0;
  for (double v : frame_ms) sum += v;
  t.mean_frame_ms = sum / frame_ms.size();
  std::vector<double> sorted = frame_ms;
  std::sort(sorted.begin(), sorted.end());
  const auto idx = static_cast<std::size_t>(std::clamp<long>(
      std::lround(std::ceil(0.95 * sorted.size())) - 1, 0, static_cast<long>(sorted.size()) - 1));
  t.p95_frame_ms = sorted[idx];
  t.effective_fps = t.mean_frame_ms > 0.0 ? 1000.0 / t.mean_frame_ms : 0.0;
  return t;
}

Point3 manual_init_offset(std::uint64_t seed) {
  auto rng = stream_rng(seed, 0, RngStream::kManualInit);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Point3 d{gauss(rng), gauss(rng), gauss(rng)};
  const double n = d.norm();
  if (n < 1e-9) return Point3{kManualInitError, 0.0, 0.0};
  return d * (kManualInitError / n);
}

ScenarioRun run_scenario(const Scenario& scenario, const RunSettings& settings) {
  scenario.validate();
  const int total = total_frames(scenario);
  const int n = settings.frame_limit >= 0 ? std::min(settings.frame_limit, total) : total;

  ScenarioRun out;
  out.scenario = scenario;
  out.gt = make_trajectory(scenario.trajectory);

  const ScanRenderer renderer(scenario.scene, scenario.sensor);
  const Detector detector = make_detector(scenario);
  std::vector<std::unique_ptr<SequenceTracker>> trackers = make_trackers(scenario, detector);

  if (!settings.dump_dir.empty()) std::filesystem::create_directories(settings.dump_dir);

  render_pipeline(renderer, scenario.trajectory, n, scenario.sensor.frame_rate,
                  resolve_threads(settings.threads), [&](PanoramicScan&& scan) {
                    for (auto& tracker : trackers) tracker->consume(scan);
                    if (!settings.dump_dir.empty())
                      dump_scan(scan, settings.dump_dir + "/" + scan_file_name(scan.frame_index));
                  });

  for (std::size_t i = 0; i < trackers.size(); ++i) {
    ModeOutcome o;
    o.mode = scenario.modes[i];
    o.run = trackers[i]->take();
    o.initialized = o.run.init_frame >= 0;
    o.timing = timing_from(o.run.frame_ms);
    if (o.initialized && !o.run.poses.empty()) {
      Trajectory traj;
      traj.samples = o.run.poses;
      traj.mode = mode_name(o.mode);
      traj.scenario_id = scenario.id;
      traj.seed = scenario.seed;
      try {
        o.report = compute_ape(traj, out.gt);
        o.evaluated = true;
      } catch (const std::runtime_error&) {
        // nothing paired with truth; leave the report empty
      }
    }
    out.outcomes.push_back(std::move(o));
  }

  std::vector<MethodRow> rows;
  for (const ModeOutcome& o : out.outcomes)
    if (o.evaluated)
      rows.push_back(MethodRow{mode_name(o.mode), o.report, o.timing.effective_fps});
  if (rows.size() >= 2) out.comparison = compare_methods(rows).table;
  return out;
}

void write_run_artifacts(const ScenarioRun& run, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_file(out_dir + "/gt.csv", gt_csv_text(run.gt));

  json timing{{"scenario", run.scenario.id},
              {"seed", run.scenario.seed},
              {"modes", json::object()}};
  for (const ModeOutcome& o : run.outcomes) {
    const std::string name = mode_name(o.mode);
    write_file(out_dir + "/traj_" + name + ".csv", traj_csv_text(o.run.poses));
    json rep{{"scenario", run.scenario.id}, {"seed", run.scenario.seed},
             {"mode", name},                {"initialized", o.initialized},
             {"init_frame", o.run.init_frame}, {"frames", o.run.frame_ms.size()},
             {"poses", o.run.poses.size()},  {"timing", timing_json(o.timing)}};
    if (o.evaluated) rep["ape"] = report_json(o.report);
    write_file(out_dir + "/report_" + name + ".json", rep.dump(2) + "\n");
    timing["modes"][name] = timing_json(o.timing);
  }
  write_file(out_dir + "/comparison.txt",
             run.comparison.empty() ? std::string("need two evaluated modes to compare\n")
                                    : run.comparison);
  write_file(out_dir + "/timing.json", timing.dump(2) + "\n");
}

void run_generate(const Scenario& scenario, const std::string& out_dir, int frame_limit,
                  int threads) {
  scenario.validate();
  std::filesystem::create_directories(out_dir);
  const int total = total_frames(scenario);
  const int n = frame_limit >= 0 ? std::min(frame_limit, total) : total;

  const ScanRenderer renderer(scenario.scene, scenario.sensor);
  render_pipeline(renderer, scenario.trajectory, n, scenario.sensor.frame_rate,
                  resolve_threads(threads), [&](PanoramicScan&& scan) {
                    dump_scan(scan, out_dir + "/" + scan_file_name(scan.frame_index));
                  });
  write_file(out_dir + "/gt.csv", gt_csv_text(make_trajectory(scenario.trajectory)));
}

std::vector<BenchOutcome> run_benchmark(const Scenario& scenario, int n_frames, int repetitions,
                                        int threads) {
  if (n_frames < 100)
    throw std::invalid_argument("bench: need at least 100 frames for a stable estimate");
  if (repetitions < 1) throw std::invalid_argument("bench: repetitions must be >= 1");
  scenario.validate();

  const ScanRenderer renderer(scenario.scene, scenario.sensor);
  const Detector detector = make_detector(scenario);

  std::vector<BenchOutcome> out;
  for (TrackerMode m : scenario.modes) out.push_back(BenchOutcome{m, {}, {}});
  std::vector<std::vector<double>> all_ms(scenario.modes.size());

  for (int rep = 0; rep < repetitions; ++rep) {
    std::vector<std::unique_ptr<SequenceTracker>> trackers = make_trackers(scenario, detector);
    render_pipeline(renderer, scenario.trajectory, n_frames, scenario.sensor.frame_rate,
                    resolve_threads(threads), [&](PanoramicScan&& scan) {
                      for (auto& tracker : trackers) tracker->consume(scan);
                    });
    for (std::size_t i = 0; i < trackers.size(); ++i) {
      const TrackRun run = trackers[i]->take();
      out[i].repetitions.push_back(timing_from(run.frame_ms));
      all_ms[i].insert(all_ms[i].end(), run.frame_ms.begin(), run.frame_ms.end());
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].aggregate = timing_from(all_ms[i]);
  return out;
}

void write_bench_artifacts(const std::vector<BenchOutcome>& outcomes, const Scenario& scenario,
                           int n_frames, int repetitions, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  json doc{{"scenario", scenario.id},
           {"seed", scenario.seed},
           {"n_frames", n_frames},
           {"repetitions", repetitions},
           {"modes", json::object()}};
  for (const BenchOutcome& o : outcomes) {
    json reps = json::array();
    for (const TimingStats& t : o.repetitions) reps.push_back(timing_json(t));
    doc["modes"][mode_name(o.mode)] =
        json{{"repetitions", reps}, {"aggregate", timing_json(o.aggregate)}};
  }
  write_file(out_dir + "/timing.json", doc.dump(2) + "\n");
}

void dump_scan(const PanoramicScan& scan, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::invalid_argument("cannot write scan dump " + path);

  char header[16];
  std::memcpy(header, "PANO", 4);
  const std::uint16_t version = 1;
  const std::uint16_t rows = static_cast<std::uint16_t>(scan.rows);
  const std::uint32_t cols = static_cast<std::uint32_t>(scan.cols);
  std::memcpy(header + 4, &version, 2);
  std::memcpy(header + 6, &rows, 2);
  std::memcpy(header + 8, &cols, 4);
  std::memcpy(header + 12, &scan.frame_index, 4);
  out.write(header, sizeof header);

  const std::size_t n = scan.range.size();
  std::vector<char> body(n * 9);
  for (std::size_t i = 0; i < n; ++i) {
    std::memcpy(body.data() + i * 9, &scan.range[i], 4);
    std::memcpy(body.data() + i * 9 + 4, &scan.signal[i], 4);
    body[i * 9 + 8] = static_cast<char>(scan.valid[i]);
  }
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw std::runtime_error("short write on " + path);
}

PanoramicScan load_scan_dump(const std::string& path, const SensorIntrinsics& intr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read scan dump " + path);

  char header[16];
  in.read(header, sizeof header);
  if (!in || std::memcmp(header, "PANO", 4) != 0)
    throw std::invalid_argument(path + ": not a scan dump");
  std::uint16_t version = 0, rows = 0;
  std::uint32_t cols = 0, frame_index = 0;
  std::memcpy(&version, header + 4, 2);
  std::memcpy(&rows, header + 6, 2);
  std::memcpy(&cols, header + 8, 4);
  std::memcpy(&frame_index, header + 12, 4);
  if (version != 1) throw std::invalid_argument(path + ": unsupported dump version");
  if (rows != intr.rows || static_cast<int>(cols) != intr.cols)
    throw std::invalid_argument(path + ": dump dimensions do not match the intrinsics");

  PanoramicScan scan;
  scan.allocate(rows, static_cast<int>(cols));
  scan.frame_index = frame_index;
  scan.timestamp = frame_index / intr.frame_rate;

  const std::size_t n = scan.range.size();
  std::vector<char> body(n * 9);
  in.read(body.data(), static_cast<std::streamsize>(body.size()));
  if (!in) throw std::invalid_argument(path + ": truncated scan dump");

  for (std::size_t i = 0; i < n; ++i) {
    std::memcpy(&scan.range[i], body.data() + i * 9, 4);
    std::memcpy(&scan.signal[i], body.data() + i * 9 + 4, 4);
    scan.valid[i] = static_cast<std::uint8_t>(body[i * 9 + 8]);
    if (scan.valid[i]) {
      const int row = static_cast<int>(i) / scan.cols;
      const int col = static_cast<int>(i) % scan.cols;
      scan.points[i] = unproject(PixelCoord{row, col}, scan.range[i], intr);
    }
  }
  return scan;
}

std::vector<GroundTruthSample> read_gt_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != "t,x,y,z,vx,vy,vz")
    throw std::invalid_argument(path + ": unexpected header");

  std::vector<GroundTruthSample> gt;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 7) throw std::invalid_argument(path + ": expected 7 fields per row");
    GroundTruthSample g;
    g.t = parse_num(f[0], path);
    g.position = {parse_num(f[1], path), parse_num(f[2], path), parse_num(f[3], path)};
    g.velocity = {parse_num(f[4], path), parse_num(f[5], path), parse_num(f[6], path)};
    gt.push_back(g);
  }
  return gt;
}

Trajectory read_traj_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != "t,x,y,z,vx,vy,vz,source,cluster_count")
    throw std::invalid_argument(path + ": unexpected header");

  Trajectory traj;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 9) throw std::invalid_argument(path + ": expected 9 fields per row");
    PoseEstimate p;
    p.t = parse_num(f[0], path);
    p.position = {parse_num(f[1], path), parse_num(f[2], path), parse_num(f[3], path)};
    p.velocity = {parse_num(f[4], path), parse_num(f[5], path), parse_num(f[6], path)};
    if (f[7] == "measured")
      p.source = PoseSource::kMeasured;
    else if (f[7] == "predicted")
      p.source = PoseSource::kPredicted;
    else
      throw std::invalid_argument(path + ": unknown source \"" + f[7] + "\"");
    p.cluster_count = static_cast<int>(parse_num(f[8], path));
    traj.samples.push_back(p);
  }
  return traj;
}

void recompute_reports(const std::string& dir) {
  const std::string gt_path = dir + "/gt.csv";
  if (!std::filesystem::exists(gt_path))
    throw std::invalid_argument("report: missing " + gt_path);
  const std::vector<GroundTruthSample> gt = read_gt_csv(gt_path);

  std::map<std::string, double> fps;
  const std::string timing_path = dir + "/timing.json";
  if (std::filesystem::exists(timing_path)) {
    std::ifstream in(timing_path, std::ios::binary);
    json doc;
    try {
      in >> doc;
      for (auto it = doc.at("modes").begin(); it != doc.at("modes").end(); ++it) {
        const json& entry = it.value();
        const json& t = entry.contains("aggregate") ? entry.at("aggregate") : entry;
        fps[it.key()] = t.at("effective_fps").get<double>();
      }
    } catch (const json::exception&) {
      // stale or foreign timing file; throughput just stays unknown
      fps.clear();
    }
  }

  std::vector<std::string> traj_files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("traj_", 0) == 0 && name.size() > 9 && name.ends_with(".csv"))
      traj_files.push_back(name);
  }
  std::sort(traj_files.begin(), traj_files.end());
  if (traj_files.empty())
    throw std::invalid_argument("report: no traj_<mode>.csv files in " + dir);

  std::vector<MethodRow> rows;
  for (const std::string& name : traj_files) {
    const std::string mode = name.substr(5, name.size() - 9);
    Trajectory traj = read_traj_csv(dir + "/" + name);
    traj.mode = mode;
    json rep{{"mode", mode}, {"recomputed", true}, {"poses", traj.samples.size()}};
    if (!traj.samples.empty()) {
      const ErrorReport report = compute_ape(traj, gt);
      rep["ape"] = report_json(report);
      const double mode_fps = fps.count(mode) ? fps[mode] : 0.0;
      rep["timing"] = json{{"effective_fps", mode_fps}};
      rows.push_back(MethodRow{mode, report, mode_fps});
    }
    write_file(dir + "/report_" + mode + ".json", rep.dump(2) + "\n");
  }
  write_file(dir + "/comparison.txt",
             rows.size() >= 2 ? compare_methods(rows).table
                              : std::string("need two evaluated modes to compare\n"));
}

}  // namespace panotrack

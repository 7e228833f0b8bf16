#include "panotrack/tracker.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace panotrack {

void TrackerParams::validate() const {
  if (n_miss_lost < 1)
    throw std::invalid_argument("tracker: n_miss_lost must be >= 1");
}

bool track_lost(const TrackerState& state, const TrackerParams& params) {
  return state.initialized && state.kf.misses >= params.n_miss_lost;
}

namespace {

void require_matching(const PanoramicScan& scan, const SensorIntrinsics& intr) {
  if (scan.rows != intr.rows || scan.cols != intr.cols)
    throw std::invalid_argument("tracker: scan dimensions do not match intrinsics");
}

std::vector<Cluster> clusters_in_roi(const PanoramicScan& scan, const ImageRoi& roi,
                                     const TrackerParams& params) {
  const std::vector<RoiPoint> lifted = roi_to_points(scan, roi);
  std::vector<Point3> pts;
  pts.reserve(lifted.size());
  for (const RoiPoint& rp : lifted) pts.push_back(rp.p);
  pts = ground_removal(pts, params.cluster.ground);
  return dbscan(pts, params.cluster.eps, params.cluster.min_pts);
}

// First association after a manual start: no previous count/range to gate on,
// so take the cluster nearest the filter position, within the range gate.
const Cluster* seed_cluster(const std::vector<Cluster>& clusters, const Point3& ref,
                            const AssocParams& assoc) {
  const Cluster* best = nullptr;
  double best_dist = 0.0;
  for (const Cluster& c : clusters) {
    const double dist = (c.centroid - ref).norm();
    if (dist > assoc.max_range_dev) continue;
    if (!best || dist < best_dist) {
      best = &c;
      best_dist = dist;
    }
  }
  return best;
}

}  // namespace

std::optional<TrackerState> init_track(const PanoramicScan& scan, const Detector& detector,
                                       const TrackerParams& params, TrackerMode mode) {
  if (mode == TrackerMode::kPcdOnly)
    throw std::invalid_argument("tracker: pcd_only starts with init_track_manual");
  require_matching(scan, detector.intrinsics());

  const std::optional<Detection> detection = detector.detect(scan);
  if (!detection) return std::nullopt;

  const std::vector<Cluster> clusters = clusters_in_roi(scan, detection->roi, params);
  if (clusters.empty()) return std::nullopt;
  const Cluster* largest = &clusters.front();
  for (const Cluster& c : clusters)
    if (c.count > largest->count) largest = &c;

  TrackerState state;
  state.kf = kf_init(largest->centroid, Point3{}, scan.timestamp, params.kf);
  state.prev_cluster = PrevCluster{largest->count, largest->range};
  state.initialized = true;
  state.mode = mode;
  return state;
}

TrackerState init_track_manual(const Point3& position, double t, const TrackerParams& params) {
  TrackerState state;
  state.kf = kf_init(position, Point3{}, t, params.kf);  // rejects non-finite input
  state.initialized = true;
  state.mode = TrackerMode::kPcdOnly;
  return state;
}

PoseEstimate step(TrackerState& state, const PanoramicScan& scan, const Detector& detector,
                  const TrackerParams& params) {
  if (!state.initialized)
    throw std::logic_error("tracker: step on an uninitialized state");
  require_matching(scan, detector.intrinsics());

  state.kf = kf_predict(state.kf, scan.timestamp - state.kf.t, params.kf);

  std::optional<Detection> detection;
  if (state.mode != TrackerMode::kPcdOnly) detection = detector.detect(scan);

  std::optional<ImageRoi> roi;
  if (detection)
    roi = detection->roi;
  else if (state.mode != TrackerMode::kImageOnly)
    roi = predicted_roi(state.kf, detector.intrinsics(), params.kf);

  const Cluster* chosen = nullptr;
  std::vector<Cluster> clusters;
  if (roi) {
    clusters = clusters_in_roi(scan, *roi, params);
    if (state.prev_cluster.count == 0) {
      chosen = seed_cluster(clusters, state.kf.position(), params.cluster.assoc);
    } else {
      const SelectionOutcome sel = select_cluster(clusters, state.prev_cluster.count,
                                                  state.prev_cluster.range, params.cluster.assoc);
      if (sel.accepted) chosen = &clusters[sel.candidate_index];
    }
  }

  PoseEstimate pose;
  pose.t = scan.timestamp;
  if (chosen) {
    state.kf = kf_update(state.kf, chosen->centroid, params.kf);
    state.prev_cluster = PrevCluster{chosen->count, chosen->range};
    pose.source = PoseSource::kMeasured;
    pose.cluster_count = static_cast<int>(chosen->count);
  } else {
    state.kf.misses += 1;
    pose.source = PoseSource::kPredicted;
  }
  pose.position = state.kf.position();
  pose.velocity = state.kf.velocity();
  return pose;
}

SequenceTracker::SequenceTracker(TrackerMode mode, const Detector& detector,
                                 const TrackerParams& params,
                                 const std::optional<Point3>& manual_init)
    : detector_(detector), params_(params), mode_(mode), manual_init_(manual_init) {
  params_.validate();
  if (mode == TrackerMode::kPcdOnly && !manual_init_)
    throw std::invalid_argument("tracker: pcd_only needs an initial position");
  run_.state.mode = mode;
}

void SequenceTracker::consume(const PanoramicScan& scan) {
  const auto started = std::chrono::steady_clock::now();

  if (!run_.state.initialized) {
    if (mode_ == TrackerMode::kPcdOnly) {
      run_.state = init_track_manual(*manual_init_, scan.timestamp, params_);
      run_.init_frame = frame_index_;
      PoseEstimate pose;
      pose.t = scan.timestamp;
      pose.position = *manual_init_;
      run_.poses.push_back(pose);
    } else if (std::optional<TrackerState> st = init_track(scan, detector_, params_, mode_)) {
      run_.state = *st;
      run_.init_frame = frame_index_;
      PoseEstimate pose;
      pose.t = scan.timestamp;
      pose.position = run_.state.kf.position();
      pose.source = PoseSource::kMeasured;
      pose.cluster_count = static_cast<int>(run_.state.prev_cluster.count);
      run_.poses.push_back(pose);
    }
  } else {
    run_.poses.push_back(step(run_.state, scan, detector_, params_));
  }

  const auto finished = std::chrono::steady_clock::now();
  run_.frame_ms.push_back(std::chrono::duration<double, std::milli>(finished - started).count());
  ++frame_index_;
}

TrackRun run_sequence(const std::vector<PanoramicScan>& scans, TrackerMode mode,
                      const Detector& detector, const TrackerParams& params,
                      const std::optional<Point3>& manual_init) {
  SequenceTracker tracker(mode, detector, params, manual_init);
  for (const PanoramicScan& scan : scans) tracker.consume(scan);
  return tracker.take();
}

}  // namespace panotrack

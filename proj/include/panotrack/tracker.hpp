#pragma once

#include <optional>
#include <vector>

#include "panotrack/cluster.hpp"
#include "panotrack/detect.hpp"
#include "panotrack/geometry.hpp"
#include "panotrack/kalman.hpp"

namespace panotrack {

// fused: detection box when available, filter-predicted box otherwise.
// image_only: detection box or nothing. pcd_only: always the predicted box.
enum class TrackerMode { kFused, kImageOnly, kPcdOnly };

enum class PoseSource { kMeasured, kPredicted };

struct TrackerParams {
  ClusterParams cluster;
  KfParams kf;
  int n_miss_lost = 10;  // consecutive coast frames before the track counts as lost

  void validate() const;  // throws std::invalid_argument
};

struct PoseEstimate {
  double t = 0.0;  // s
  Point3 position;
  Point3 velocity;
  PoseSource source = PoseSource::kPredicted;
  int cluster_count = 0;  // points in the accepted cluster, 0 on coast frames
};

// Summary of the last accepted cluster, enough for the count/range association
// gates. count stays zero after a manual start until a cluster is associated.
struct PrevCluster {
  std::size_t count = 0;
  double range = 0.0;  // m
};

struct TrackerState {
  TrackState kf;
  PrevCluster prev_cluster;
  bool initialized = false;
  TrackerMode mode = TrackerMode::kFused;
};

bool track_lost(const TrackerState& state, const TrackerParams& params);

// Detection-seeded start for the image-driven modes: detect, lift the box to
// 3D, drop ground, cluster, and start the filter at the largest cluster's
// centroid with zero velocity. Nothing when any stage comes up empty; callers
// retry on the next scan.
std::optional<TrackerState> init_track(const PanoramicScan& scan, const Detector& detector,
                                       const TrackerParams& params, TrackerMode mode);

// Start from an externally known position (the point-cloud-only protocol).
TrackerState init_track_manual(const Point3& position, double t, const TrackerParams& params);

// One tracking frame: predict to the scan time, pick the search box per mode,
// extract and associate a cluster, then update or coast. Advances state and
// returns the pose for this scan.
PoseEstimate step(TrackerState& state, const PanoramicScan& scan, const Detector& detector,
                  const TrackerParams& params);

struct TrackRun {
  std::vector<PoseEstimate> poses;  // one per scan from the init frame on
  std::vector<double> frame_ms;     // wall-clock processing time, one per input scan
  int init_frame = -1;              // scan index where the track started, -1 if never
  TrackerState state;               // state after the last scan
};

// Incremental sequence driver for callers that stream scans instead of holding
// the whole set: feed time-ordered scans one at a time. Image-driven modes
// auto-initialize from detections; pcd_only starts at manual_init (required for
// that mode; the first pose echoes it verbatim). frame_ms records processing
// time for every consumed scan, initialized or not.
class SequenceTracker {
 public:
  SequenceTracker(TrackerMode mode, const Detector& detector, const TrackerParams& params,
                  const std::optional<Point3>& manual_init = std::nullopt);

  void consume(const PanoramicScan& scan);

  const TrackRun& run() const { return run_; }
  TrackRun take() { return std::move(run_); }

 private:
  const Detector& detector_;
  TrackerParams params_;
  TrackerMode mode_;
  std::optional<Point3> manual_init_;
  int frame_index_ = 0;
  TrackRun run_;
};

// Convenience wrapper over SequenceTracker for in-memory scan sets.
TrackRun run_sequence(const std::vector<PanoramicScan>& scans, TrackerMode mode,
                      const Detector& detector, const TrackerParams& params,
                      const std::optional<Point3>& manual_init = std::nullopt);

}  // namespace panotrack

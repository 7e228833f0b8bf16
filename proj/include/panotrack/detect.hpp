#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>

#include "panotrack/geometry.hpp"
#include "panotrack/sim.hpp"

namespace panotrack {

struct Detection {
  ImageRoi roi;
  double confidence = 0.0;  // [0, 1]
};

enum class DetectorMode { kBlob, kSimulated };

struct BlobParams {
  double intensity_threshold = 0.55;  // signal cut separating target from background bands
  int min_area_px = 2;
  int max_area_px = 4000;
  int dilation_px = 1;  // bridges dropout holes before grouping
};

struct SimulatedParams {
  double max_reliable_range = 2.4;      // m, misses start beyond this
  double full_miss_range_factor = 1.5;  // miss probability hits 1 at factor * max_reliable_range
  int bbox_jitter_px = 1;
};

struct DetectorConfig {
  DetectorMode mode = DetectorMode::kBlob;
  BlobParams blob;
  SimulatedParams simulated;
  double detection_dropout = 0.0;  // extra per-frame loss, applied in either mode
  std::uint64_t rng_seed = 1;

  void validate() const;  // throws std::invalid_argument
};

// Miss probability of the simulated detector: zero through max_reliable_range,
// rising linearly to one at full_miss_range_factor * max_reliable_range.
double miss_probability(const SimulatedParams& params, double range);

// Per-scan target detector. Blob mode works purely on the signal image:
// threshold, dilate, group wrap-aware connected components, filter by area,
// and box the component with the largest integrated intensity (confidence is
// that component's mean intensity). Simulated mode stands
// in for a learned detector: it consults the bound ground truth and returns
// the projected target box, jittered, with range-dependent misses. Results
// depend only on (config.rng_seed, scan.frame_index), never on call order.
class Detector {
 public:
  Detector(const DetectorConfig& config, const SensorIntrinsics& intr);

  // Simulated mode needs the flight path and target shape; the lookup maps a
  // scan timestamp to the pose rendered into that scan.
  using TruthLookup = std::function<std::optional<GroundTruthSample>(double timestamp)>;
  void bind_truth(TruthLookup lookup, const UavShape& shape);

  std::optional<Detection> detect(const PanoramicScan& scan) const;

  const DetectorConfig& config() const { return config_; }
  const SensorIntrinsics& intrinsics() const { return intr_; }

 private:
  std::optional<Detection> detect_blob(const PanoramicScan& scan) const;
  std::optional<Detection> detect_simulated(const PanoramicScan& scan, std::mt19937_64& rng) const;

  DetectorConfig config_;
  SensorIntrinsics intr_;
  TruthLookup truth_;
  UavShape shape_;
};

}  // namespace panotrack

#include "panotrack/detect.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "panotrack/rng.hpp"

namespace panotrack {

void DetectorConfig::validate() const {
  if (!(blob.intensity_threshold > 0.0))
    throw std::invalid_argument("detector: intensity_threshold must be positive");
  if (blob.min_area_px < 1)
    throw std::invalid_argument("detector: min_area_px must be >= 1");
  if (blob.max_area_px < blob.min_area_px)
    throw std::invalid_argument("detector: max_area_px must be >= min_area_px");
  if (blob.dilation_px < 0)
    throw std::invalid_argument("detector: dilation_px must be >= 0");
  if (!(simulated.max_reliable_range > 0.0))
    throw std::invalid_argument("detector: max_reliable_range must be positive");
  if (!(simulated.full_miss_range_factor > 1.0))
    throw std::invalid_argument("detector: full_miss_range_factor must exceed 1");
  if (simulated.bbox_jitter_px < 0)
    throw std::invalid_argument("detector: bbox_jitter_px must be >= 0");
  if (!(detection_dropout >= 0.0 && detection_dropout < 1.0))
    throw std::invalid_argument("detector: detection_dropout must be in [0, 1)");
}

double miss_probability(const SimulatedParams& params, double range) {
  if (range <= params.max_reliable_range) return 0.0;
  const double full_miss = params.max_reliable_range * params.full_miss_range_factor;
  if (range >= full_miss) return 1.0;
  return (range - params.max_reliable_range) / (full_miss - params.max_reliable_range);
}

Detector::Detector(const DetectorConfig& config, const SensorIntrinsics& intr)
    : config_(config), intr_(intr) {
  config_.validate();
  intr_.validate();
}

void Detector::bind_truth(TruthLookup lookup, const UavShape& shape) {
  if (!(std::max(shape.arm_span * 0.5, shape.body_radius) > 0.0))
    throw std::invalid_argument("detector: target shape has no extent");
  truth_ = std::move(lookup);
  shape_ = shape;
}

std::optional<Detection> Detector::detect(const PanoramicScan& scan) const {
  if (scan.rows != intr_.rows || scan.cols != intr_.cols)
    throw std::invalid_argument("detect: scan dimensions do not match intrinsics");
  // One generator per frame so results depend only on (seed, frame_index),
  // no matter how many scans were processed before this one.
  auto rng = stream_rng(config_.rng_seed, scan.frame_index, RngStream::kDetector);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  if (config_.detection_dropout > 0.0 && u01(rng) < config_.detection_dropout)
    return std::nullopt;
  if (config_.mode == DetectorMode::kBlob) return detect_blob(scan);
  return detect_simulated(scan, rng);
}

namespace {

struct BlobStats {
  double intensity_sum = 0.0;
  int area = 0;
  int row_min = 0;
  int row_max = 0;
  std::vector<int> cols;  // columns of above-threshold pixels, duplicates ok
};

// Shortest wrap-aware column interval covering all listed columns: drop the
// largest circular gap between occupied columns and keep the rest.
void covering_arc(std::vector<int>& cols, int image_cols, int* start, int* len) {
  std::sort(cols.begin(), cols.end());
  cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  const int m = static_cast<int>(cols.size());
  int best_gap = cols.front() + image_cols - cols.back();
  int best_start = cols.front();
  for (int i = 0; i + 1 < m; ++i) {
    const int gap = cols[i + 1] - cols[i];
    if (gap > best_gap) {
      best_gap = gap;
      best_start = cols[i + 1];
    }
  }
  *start = best_start;
  *len = image_cols - best_gap + 1;
}

}  // namespace

std::optional<Detection> Detector::detect_blob(const PanoramicScan& scan) const {
  const BlobParams& bp = config_.blob;
  const int rows = scan.rows;
  const int cols = scan.cols;
  const std::size_t n = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);

  std::vector<std::uint8_t> hot(n, 0);
  std::vector<std::size_t> hot_idx;
  for (std::size_t i = 0; i < n; ++i) {
    if (scan.signal[i] > bp.intensity_threshold) {
      hot[i] = 1;
      hot_idx.push_back(i);
    }
  }
  if (hot_idx.empty()) return std::nullopt;

  // Grouping runs on a dilated mask so single-pixel dropout holes do not
  // split one target into several components. Area, score, and the box are
  // still taken from the original above-threshold pixels.
  std::vector<std::uint8_t> mask = hot;
  if (bp.dilation_px > 0) {
    for (std::size_t i : hot_idx) {
      const int r = static_cast<int>(i) / cols;
      const int c = static_cast<int>(i) % cols;
      for (int dr = -bp.dilation_px; dr <= bp.dilation_px; ++dr) {
        const int rr = r + dr;
        if (rr < 0 || rr >= rows) continue;
        for (int dc = -bp.dilation_px; dc <= bp.dilation_px; ++dc) {
          const int cc = ((c + dc) % cols + cols) % cols;
          mask[scan.index(rr, cc)] = 1;
        }
      }
    }
  }

  std::vector<int> label(n, -1);
  int n_labels = 0;
  std::vector<std::size_t> stack;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (!mask[seed] || label[seed] >= 0) continue;
    const int id = n_labels++;
    label[seed] = id;
    stack.assign(1, seed);
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      const int r = static_cast<int>(cur) / cols;
      const int c = static_cast<int>(cur) % cols;
      for (int dr = -1; dr <= 1; ++dr) {
        const int rr = r + dr;
        if (rr < 0 || rr >= rows) continue;
        for (int dc = -1; dc <= 1; ++dc) {
          const int cc = (c + dc + cols) % cols;
          const std::size_t ni = scan.index(rr, cc);
          if (mask[ni] && label[ni] < 0) {
            label[ni] = id;
            stack.push_back(ni);
          }
        }
      }
    }
  }

  std::vector<BlobStats> blobs(static_cast<std::size_t>(n_labels));
  for (std::size_t i : hot_idx) {
    BlobStats& b = blobs[static_cast<std::size_t>(label[i])];
    const int r = static_cast<int>(i) / cols;
    const int c = static_cast<int>(i) % cols;
    if (b.area == 0) {
      b.row_min = r;
      b.row_max = r;
    } else {
      b.row_min = std::min(b.row_min, r);
      b.row_max = std::max(b.row_max, r);
    }
    b.intensity_sum += scan.signal[i];
    b.area += 1;
    b.cols.push_back(c);
  }

  // Rank by integrated brightness rather than the mean: a few saturated
  // pixels on an arm tip must not outrank the target's main component.
  const BlobStats* best = nullptr;
  double best_score = 0.0;
  ImageRoi best_roi;
  for (BlobStats& b : blobs) {
    if (b.area < bp.min_area_px || b.area > bp.max_area_px) continue;
    const double score = b.intensity_sum;
    ImageRoi roi;
    roi.row_min = b.row_min;
    roi.row_max = b.row_max;
    covering_arc(b.cols, cols, &roi.col_start, &roi.col_len);
    const bool better =
        !best || score > best_score ||
        (score == best_score &&
         (b.area > best->area ||
          (b.area == best->area &&
           (b.row_min < best->row_min ||
            (b.row_min == best->row_min && roi.col_start < best_roi.col_start)))));
    if (better) {
      best = &b;
      best_score = score;
      best_roi = roi;
    }
  }
  if (!best) return std::nullopt;

  Detection det;
  det.roi = best_roi;
  det.confidence = std::clamp(best->intensity_sum / best->area, 0.0, 1.0);
  return det;
}

std::optional<Detection> Detector::detect_simulated(const PanoramicScan& scan,
                                                    std::mt19937_64& rng) const {
  if (!truth_)
    throw std::logic_error("simulated detector: bind_truth was not called");
  const std::optional<GroundTruthSample> sample = truth_(scan.timestamp);
  if (!sample) return std::nullopt;

  const Point3 p = sample->position;
  const double range = p.norm();
  const std::optional<PixelCoord> center = project(p, intr_);
  if (!center) return std::nullopt;

  const double p_miss = miss_probability(config_.simulated, range);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  if (u01(rng) < p_miss) return std::nullopt;

  // Box size from the target's bounding sphere. Elevation extent of a sphere
  // at range r is asin(R/r); azimuth extent uses the horizontal distance
  // because azimuth is measured in the sensor's horizontal plane.
  const double sphere = std::max(shape_.arm_span * 0.5, shape_.body_radius);
  const double horiz = std::hypot(p.x, p.y);
  const double half_el = std::asin(std::min(1.0, sphere / range));
  const double half_az = std::asin(std::min(1.0, horiz > 0.0 ? sphere / horiz : 1.0));
  const int half_rows = static_cast<int>(std::ceil(half_el / intr_.row_res())) + 1;
  const int half_cols = static_cast<int>(std::ceil(half_az / intr_.col_res())) + 1;

  std::uniform_int_distribution<int> jitter(-config_.simulated.bbox_jitter_px,
                                            config_.simulated.bbox_jitter_px);
  const int row_jitter = jitter(rng);
  const int col_jitter = jitter(rng);

  ImageRoi roi;
  roi.row_min = std::clamp(center->row - half_rows + row_jitter, 0, intr_.rows - 1);
  roi.row_max = std::clamp(center->row + half_rows + row_jitter, 0, intr_.rows - 1);
  roi.col_len = std::min(intr_.cols, 2 * half_cols + 1);
  const int start = center->col - half_cols + col_jitter;
  roi.col_start = ((start % intr_.cols) + intr_.cols) % intr_.cols;

  Detection det;
  det.roi = roi;
  det.confidence = 1.0 - p_miss;
  return det;
}

}  // namespace panotrack

#include "panotrack/geometry.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace panotrack {

void SensorIntrinsics::validate() const {
  if (rows < 2) throw std::invalid_argument("sensor rows must be >= 2");
  if (cols < 4) throw std::invalid_argument("sensor cols must be >= 4");
  if (!(fov_vertical > 0.0) || !(fov_vertical < kPi)) {
    throw std::invalid_argument("sensor fov_vertical must lie in (0, pi)");
  }
  if (!(frame_rate > 0.0)) throw std::invalid_argument("sensor frame_rate must be > 0");
  if (!(min_range > 0.0) || !(min_range < max_range)) {
    throw std::invalid_argument("sensor range gate needs 0 < min_range < max_range");
  }
}

void PanoramicScan::allocate(int r, int c) {
  rows = r;
  cols = c;
  const std::size_t n = static_cast<std::size_t>(r) * static_cast<std::size_t>(c);
  range.assign(n, 0.0f);
  signal.assign(n, 0.0f);
  valid.assign(n, 0);
  points.assign(n, Point3{});
}

std::optional<PixelCoord> project(const Point3& p, const SensorIntrinsics& intr) {
  const double r = p.norm();
  if (r < intr.min_range || r > intr.max_range) return std::nullopt;

  double az = std::atan2(p.y, p.x);
  if (az < 0.0) az += kTwoPi;
  int col = static_cast<int>(std::floor(az / kTwoPi * intr.cols));
  // az/2pi can round up to 1.0 when az sits just below the seam.
  if (col >= intr.cols) col = intr.cols - 1;
  if (col < 0) col = 0;

  const double half_fov = intr.fov_vertical / 2.0;
  const double el = std::asin(std::clamp(p.z / r, -1.0, 1.0));
  // Tolerance keeps elevations computed exactly on the rim inside the image.
  const double edge = half_fov + 1e-12;
  if (el > edge || el < -edge) return std::nullopt;
  int row = static_cast<int>(std::floor((half_fov - el) / intr.fov_vertical * intr.rows));
  // el == -fov/2 lands exactly on the lower edge and belongs to the last row.
  if (row >= intr.rows) row = intr.rows - 1;
  if (row < 0) row = 0;

  return PixelCoord{row, col};
}

Point3 pixel_direction(PixelCoord px, const SensorIntrinsics& intr) {
  if (px.row < 0 || px.row >= intr.rows || px.col < 0 || px.col >= intr.cols) {
    throw std::invalid_argument("pixel (" + std::to_string(px.row) + "," + std::to_string(px.col) +
                                ") outside a " + std::to_string(intr.rows) + "x" +
                                std::to_string(intr.cols) + " image");
  }
  const double az = (px.col + 0.5) * intr.col_res();
  const double el = intr.fov_vertical / 2.0 - (px.row + 0.5) * intr.row_res();
  const double c = std::cos(el);
  return Point3{c * std::cos(az), c * std::sin(az), std::sin(el)};
}

Point3 unproject(PixelCoord px, double range, const SensorIntrinsics& intr) {
  if (!(range > 0.0)) throw std::invalid_argument("unproject needs a positive range");
  return pixel_direction(px, intr) * range;
}

std::vector<RoiPoint> roi_to_points(const PanoramicScan& scan, const ImageRoi& roi) {
  if (scan.rows <= 0 || scan.cols <= 0) throw std::invalid_argument("empty scan");
  if (roi.row_min < 0 || roi.row_max >= scan.rows || roi.row_min > roi.row_max) {
    throw std::invalid_argument("roi rows outside image");
  }
  if (roi.col_start < 0 || roi.col_start >= scan.cols || roi.col_len < 1 || roi.col_len > scan.cols) {
    throw std::invalid_argument("roi columns outside image");
  }

  std::vector<RoiPoint> out;
  out.reserve(static_cast<std::size_t>(roi.height()) * static_cast<std::size_t>(roi.col_len));
  for (int r = roi.row_min; r <= roi.row_max; ++r) {
    for (int k = 0; k < roi.col_len; ++k) {
      const int c = (roi.col_start + k) % scan.cols;
      const std::size_t i = scan.index(r, c);
      if (!scan.valid[i]) continue;
      out.push_back(RoiPoint{scan.points[i], PixelCoord{r, c}});
    }
  }
  return out;
}

DirectionTable::DirectionTable(const SensorIntrinsics& intr) : rows_(intr.rows), cols_(intr.cols) {
  dirs_.resize(static_cast<std::size_t>(rows_) * cols_);
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) {
      dirs_[static_cast<std::size_t>(r) * cols_ + c] = pixel_direction({r, c}, intr);
    }
  }
}

}  // namespace panotrack

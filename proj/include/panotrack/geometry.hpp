#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace panotrack {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

inline Point3 operator+(const Point3& a, const Point3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Point3 operator-(const Point3& a, const Point3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Point3 operator*(const Point3& a, double s) { return {a.x * s, a.y * s, a.z * s}; }
inline double dot(const Point3& a, const Point3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

struct PixelCoord {
  int row = 0;
  int col = 0;

  bool operator==(const PixelCoord&) const = default;
};

// Panoramic scanner model: azimuth is binned uniformly over [0, 2pi),
// elevation uniformly over [-fov_vertical/2, +fov_vertical/2] with row 0 at
// the top of the field of view.
struct SensorIntrinsics {
  int rows = 128;
  int cols = 1024;
  double fov_vertical = kPi / 2.0;  // rad
  double frame_rate = 10.0;         // Hz
  double min_range = 0.3;           // m
  double max_range = 50.0;          // m

  double row_res() const { return fov_vertical / rows; }
  double col_res() const { return kTwoPi / cols; }

  // Throws std::invalid_argument when a field is outside its legal domain.
  void validate() const;
};

// Half-open rectangle on the panorama. Rows are inclusive and never wrap;
// columns start at col_start and cover col_len bins, wrapping past the seam.
struct ImageRoi {
  int row_min = 0;
  int row_max = 0;
  int col_start = 0;
  int col_len = 1;

  int height() const { return row_max - row_min + 1; }

  bool contains(PixelCoord px, int image_cols) const {
    if (px.row < row_min || px.row > row_max) return false;
    int off = px.col - col_start;
    if (off < 0) off += image_cols;
    return off >= 0 && off < col_len;
  }

  static ImageRoi full(const SensorIntrinsics& intr) {
    return ImageRoi{0, intr.rows - 1, 0, intr.cols};
  }
};

// One organized scan: per-pixel range/signal/validity plus the measured 3D
// point for every valid pixel, all in the sensor frame.
struct PanoramicScan {
  int rows = 0;
  int cols = 0;
  double timestamp = 0.0;       // s
  std::uint32_t frame_index = 0;
  std::vector<float> range;     // m, row-major, 0 where invalid
  std::vector<float> signal;    // normalized [0, 1]
  std::vector<std::uint8_t> valid;
  std::vector<Point3> points;

  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(col);
  }

  void allocate(int r, int c);
};

// Maps a sensor-frame point to its pixel. Returns nothing when the point is
// outside the range gate or the vertical field of view.
std::optional<PixelCoord> project(const Point3& p, const SensorIntrinsics& intr);

// Bin-center inverse of project. Throws std::invalid_argument on an
// out-of-bounds pixel or a non-positive range.
Point3 unproject(PixelCoord px, double range, const SensorIntrinsics& intr);

// Unit ray through the bin center of a pixel.
Point3 pixel_direction(PixelCoord px, const SensorIntrinsics& intr);

struct RoiPoint {
  Point3 p;
  PixelCoord px;
};

// Collects the valid points inside a (possibly seam-wrapping) ROI, walking
// rows outward and columns in wrap order so output order is reproducible.
std::vector<RoiPoint> roi_to_points(const PanoramicScan& scan, const ImageRoi& roi);

// Precomputed bin-center rays for every pixel of one intrinsics setup.
class DirectionTable {
 public:
  explicit DirectionTable(const SensorIntrinsics& intr);

  const Point3& dir(int row, int col) const {
    return dirs_[static_cast<std::size_t>(row) * cols_ + col];
  }
  int rows() const { return rows_; }
  int cols() const { return cols_; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Point3> dirs_;
};

}  // namespace panotrack

#pragma once

#include <Eigen/Dense>

#include "panotrack/geometry.hpp"

namespace panotrack {

struct KfParams {
  double q_accel = 2.0;              // white-acceleration intensity driving Q
  double r_pos = 0.05;               // m, per-axis measurement sigma
  double roi_base_margin_px = 8.0;   // half extent before growth and covariance terms
  double roi_growth_per_miss = 1.5;  // geometric growth of the search window
  double roi_max_fraction_cols = 0.25;  // width clamp as a fraction of the image
  double roi_max_fraction_rows = 0.50;  // height clamp as a fraction of the image
  double init_pos_sigma = 0.3;       // m, track birth position sigma
  double init_vel_sigma = 1.5;       // m/s, track birth velocity sigma
};

// Constant-velocity state: position then velocity, both in the sensor frame.
struct TrackState {
  Eigen::Matrix<double, 6, 1> x = Eigen::Matrix<double, 6, 1>::Zero();
  Eigen::Matrix<double, 6, 6> P = Eigen::Matrix<double, 6, 6>::Identity();
  double t = 0.0;  // s, time the state refers to
  int misses = 0;  // consecutive frames without an accepted measurement

  Point3 position() const { return {x(0), x(1), x(2)}; }
  Point3 velocity() const { return {x(3), x(4), x(5)}; }
};

TrackState kf_init(const Point3& pos, const Point3& vel, double t, const KfParams& params);

// Time update over dt seconds (dt > 0). Process noise follows the
// white-acceleration discretization, so uncertainty grows without bound
// between measurements. Throws on non-positive dt or a non-finite state.
TrackState kf_predict(const TrackState& s, double dt, const KfParams& params);

// Measurement update with a 3D position fix, Joseph-form covariance to keep
// P symmetric positive semidefinite. Resets the miss counter.
TrackState kf_update(const TrackState& s, const Point3& z, const KfParams& params);

// Search window centered on the projected state position. Half extents are
// the base margin grown geometrically per miss plus a term proportional to
// the projected position sigma, clamped per axis to the configured fraction
// of the image. Falls back to the full panorama when the position leaves the
// sensor envelope.
ImageRoi predicted_roi(const TrackState& s, const SensorIntrinsics& intr, const KfParams& params);

}  // namespace panotrack

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "panotrack/sim.hpp"
#include "panotrack/tracker.hpp"

namespace panotrack {

struct Trajectory {
  std::vector<PoseEstimate> samples;  // strictly increasing timestamps
  std::string mode;
  std::string scenario_id;
  std::uint64_t seed = 0;
};

struct AxisStats {
  double mean = 0.0;
  double rmse = 0.0;
  double max = 0.0;
  double q25 = 0.0;
  double q50 = 0.0;
  double q75 = 0.0;  // quartiles by linear interpolation over sorted errors
};

struct ErrorReport {
  AxisStats x, y, z;     // absolute position error per axis, m
  double total_mean = 0.0;  // Euclidean error norm, m
  double total_rmse = 0.0;
  AxisStats vx, vy, vz;  // absolute velocity error per axis, m/s
  int n_paired = 0;
  double measured_fraction = 0.0;   // measured-source share of all estimates
  double detectable_distance = 0.0; // m, see compute_ape
};

// Applies a rigid transform to every pose: positions get rotation + offset,
// velocities rotation only. Rejects matrices that are not orthonormal within
// 1e-9 with determinant +1.
Trajectory align_trajectory(const Trajectory& est, const Eigen::Matrix3d& rotation,
                            const Point3& translation);

// Pairs every estimate with the nearest-in-time ground-truth sample (earliest
// wins exact ties), dropping estimates with no truth within max_dt, and
// reports absolute pose and velocity error statistics over the pairs.
// measured_fraction counts all estimates, paired or not. detectable_distance
// is the largest truth range reached before the first loss_run consecutive
// pairs with error norm above loss_ape (largest overall if that never
// happens). Throws std::invalid_argument for bad arguments or unsorted input
// and std::runtime_error when nothing pairs.
ErrorReport compute_ape(const Trajectory& est, const std::vector<GroundTruthSample>& gt,
                        double max_dt = 0.06, double loss_ape = 0.5, int loss_run = 10);

struct MethodRow {
  std::string mode;
  ErrorReport report;
  double throughput_fps = 0.0;
};

struct MethodComparison {
  std::vector<MethodRow> rows;       // input order preserved
  bool has_fused = false;
  bool fused_best_mean = false;      // fused mean error <= every other row's
  bool fused_best_rmse = false;
  std::vector<std::string> mean_ties;  // modes matching fused's mean exactly
  std::string table;                 // aligned plain-text summary
};

// Side-by-side method summary plus ordering verdicts for the fused row.
// Needs at least two rows.
MethodComparison compare_methods(const std::vector<MethodRow>& rows);

}  // namespace panotrack

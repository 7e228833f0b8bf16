#include "panotrack/kalman.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace panotrack {

namespace {

using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec3 = Eigen::Vector3d;

void require_finite(const TrackState& s) {
  if (!s.x.allFinite() || !s.P.allFinite()) {
    throw std::runtime_error("track state contains non-finite values");
  }
}

void symmetrize(Mat6& P) { P = ((P + P.transpose()) * 0.5).eval(); }

}  // namespace

TrackState kf_init(const Point3& pos, const Point3& vel, double t, const KfParams& params) {
  TrackState s;
  s.x << pos.x, pos.y, pos.z, vel.x, vel.y, vel.z;
  const double pv = params.init_pos_sigma * params.init_pos_sigma;
  const double vv = params.init_vel_sigma * params.init_vel_sigma;
  s.P = Mat6::Zero();
  s.P.diagonal() << pv, pv, pv, vv, vv, vv;
  s.t = t;
  s.misses = 0;
  require_finite(s);
  return s;
}

TrackState kf_predict(const TrackState& s, double dt, const KfParams& params) {
  if (!(dt > 0.0)) throw std::invalid_argument("kf_predict needs dt > 0");
  require_finite(s);

  Mat6 F = Mat6::Identity();
  F(0, 3) = F(1, 4) = F(2, 5) = dt;

  const double q = params.q_accel;
  const double q3 = q * dt * dt * dt / 3.0;
  const double q2 = q * dt * dt / 2.0;
  const double q1 = q * dt;
  Mat6 Q = Mat6::Zero();
  Q.topLeftCorner<3, 3>() = q3 * Mat3::Identity();
  Q.topRightCorner<3, 3>() = q2 * Mat3::Identity();
  Q.bottomLeftCorner<3, 3>() = q2 * Mat3::Identity();
  Q.bottomRightCorner<3, 3>() = q1 * Mat3::Identity();

  TrackState out = s;
  out.x = F * s.x;
  out.P = F * s.P * F.transpose() + Q;
  symmetrize(out.P);
  out.t = s.t + dt;
  return out;
}

TrackState kf_update(const TrackState& s, const Point3& z, const KfParams& params) {
  if (!std::isfinite(z.x) || !std::isfinite(z.y) || !std::isfinite(z.z)) {
    throw std::invalid_argument("kf_update needs a finite measurement");
  }
  require_finite(s);

  const Mat3 R = params.r_pos * params.r_pos * Mat3::Identity();
  const Mat3 S = s.P.topLeftCorner<3, 3>() + R;
  // K = P H^T S^-1 with H = [I 0].
  const Eigen::Matrix<double, 6, 3> PHt = s.P.leftCols<3>();
  const Eigen::Matrix<double, 6, 3> K = S.ldlt().solve(PHt.transpose()).transpose();

  const Vec3 innov = Vec3(z.x, z.y, z.z) - s.x.head<3>();

  TrackState out = s;
  out.x = s.x + K * innov;

  Mat6 A = Mat6::Identity();
  A.leftCols<3>() -= K;  // I - K H
  out.P = A * s.P * A.transpose() + K * R * K.transpose();
  symmetrize(out.P);
  out.misses = 0;
  return out;
}

ImageRoi predicted_roi(const TrackState& s, const SensorIntrinsics& intr, const KfParams& params) {
  require_finite(s);
  const Point3 pos = s.position();
  const auto center = project(pos, intr);
  if (!center) return ImageRoi::full(intr);

  const double r = pos.norm();
  const double pos_var = s.P.topLeftCorner<3, 3>().trace() / 3.0;
  const double ang_sigma = std::sqrt(std::max(pos_var, 0.0)) / r;

  const double growth = params.roi_base_margin_px * std::pow(params.roi_growth_per_miss, s.misses);
  const double half_rows_f = growth + 2.0 * ang_sigma / intr.row_res();
  const double half_cols_f = growth + 2.0 * ang_sigma / intr.col_res();

  // Extent clamps keep the search window within the configured fraction of
  // the image; the window is 2 * half + 1 pixels wide around the center.
  const int max_half_rows =
      std::max(1, (static_cast<int>(intr.rows * params.roi_max_fraction_rows) - 1) / 2);
  const int max_half_cols =
      std::max(1, (static_cast<int>(intr.cols * params.roi_max_fraction_cols) - 1) / 2);
  // Clamp in double space first: the growth term explodes after long miss
  // streaks and would overflow an int cast.
  const int half_rows =
      static_cast<int>(std::lround(std::min(half_rows_f, static_cast<double>(max_half_rows))));
  const int half_cols =
      static_cast<int>(std::lround(std::min(half_cols_f, static_cast<double>(max_half_cols))));

  ImageRoi roi;
  roi.row_min = std::max(0, center->row - half_rows);
  roi.row_max = std::min(intr.rows - 1, center->row + half_rows);
  roi.col_len = std::min(2 * half_cols + 1, intr.cols);
  roi.col_start = ((center->col - half_cols) % intr.cols + intr.cols) % intr.cols;
  return roi;
}

}  // namespace panotrack

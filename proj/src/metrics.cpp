#include "panotrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace panotrack {

namespace {

void require_sorted(const Trajectory& est) {
  for (std::size_t i = 1; i < est.samples.size(); ++i) {
    if (!(est.samples[i].t > est.samples[i - 1].t))
      throw std::invalid_argument("metrics: trajectory timestamps must strictly increase");
  }
}

double quantile(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted.front();
  const double pos = p * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= n) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

AxisStats axis_stats(std::vector<double> errs) {
  AxisStats st;
  double sum = 0.0;
  double sq = 0.0;
  for (double e : errs) {
    sum += e;
    sq += e * e;
  }
  const double n = static_cast<double>(errs.size());
  st.mean = sum / n;
  st.rmse = std::sqrt(sq / n);
  std::sort(errs.begin(), errs.end());
  st.max = errs.back();
  st.q25 = quantile(errs, 0.25);
  st.q50 = quantile(errs, 0.50);
  st.q75 = quantile(errs, 0.75);
  return st;
}

}  // namespace

Trajectory align_trajectory(const Trajectory& est, const Eigen::Matrix3d& rotation,
                            const Point3& translation) {
  const Eigen::Matrix3d gram = rotation.transpose() * rotation;
  if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
      std::abs(rotation.determinant() - 1.0) > 1e-9)
    throw std::invalid_argument("align_trajectory: transform is not a rotation");

  Trajectory out = est;
  for (PoseEstimate& s : out.samples) {
    const Eigen::Vector3d p = rotation * Eigen::Vector3d(s.position.x, s.position.y, s.position.z);
    const Eigen::Vector3d v = rotation * Eigen::Vector3d(s.velocity.x, s.velocity.y, s.velocity.z);
    s.position = Point3{p.x() + translation.x, p.y() + translation.y, p.z() + translation.z};
    s.velocity = Point3{v.x(), v.y(), v.z()};
  }
  return out;
}

ErrorReport compute_ape(const Trajectory& est, const std::vector<GroundTruthSample>& gt,
                        double max_dt, double loss_ape, int loss_run) {
  if (!(max_dt > 0.0)) throw std::invalid_argument("compute_ape: max_dt must be > 0");
  if (!(loss_ape > 0.0) || loss_run < 1)
    throw std::invalid_argument("compute_ape: bad loss declaration parameters");
  require_sorted(est);
  for (std::size_t i = 1; i < gt.size(); ++i)
    if (!(gt[i].t > gt[i - 1].t))
      throw std::invalid_argument("compute_ape: ground truth timestamps must strictly increase");

  std::vector<double> ex, ey, ez, en, evx, evy, evz;
  std::vector<double> truth_range;  // per pair, for the detectable distance
  int measured = 0;

  std::vector<double> gt_times;
  gt_times.reserve(gt.size());
  for (const GroundTruthSample& s : gt) gt_times.push_back(s.t);

  for (const PoseEstimate& s : est.samples) {
    if (s.source == PoseSource::kMeasured) ++measured;
    if (gt.empty()) continue;
    const auto it = std::lower_bound(gt_times.begin(), gt_times.end(), s.t);
    std::size_t idx;
    if (it == gt_times.begin()) {
      idx = 0;
    } else if (it == gt_times.end()) {
      idx = gt.size() - 1;
    } else {
      const std::size_t hi = static_cast<std::size_t>(it - gt_times.begin());
      // earliest sample wins an exact tie
      idx = (s.t - gt_times[hi - 1] <= gt_times[hi] - s.t) ? hi - 1 : hi;
    }
    if (std::abs(gt_times[idx] - s.t) > max_dt) continue;

    const Point3 dp = s.position - gt[idx].position;
    const Point3 dv = s.velocity - gt[idx].velocity;
    ex.push_back(std::abs(dp.x));
    ey.push_back(std::abs(dp.y));
    ez.push_back(std::abs(dp.z));
    en.push_back(dp.norm());
    evx.push_back(std::abs(dv.x));
    evy.push_back(std::abs(dv.y));
    evz.push_back(std::abs(dv.z));
    truth_range.push_back(gt[idx].position.norm());
  }

  if (en.empty())
    throw std::runtime_error("compute_ape: no estimate paired with ground truth");

  ErrorReport report;
  report.x = axis_stats(ex);
  report.y = axis_stats(ey);
  report.z = axis_stats(ez);
  report.vx = axis_stats(evx);
  report.vy = axis_stats(evy);
  report.vz = axis_stats(evz);
  report.n_paired = static_cast<int>(en.size());
  report.measured_fraction =
      est.samples.empty() ? 0.0 : static_cast<double>(measured) / est.samples.size();

  double sum = 0.0;
  double sq = 0.0;
  for (double e : en) {
    sum += e;
    sq += e * e;
  }
  report.total_mean = sum / en.size();
  report.total_rmse = std::sqrt(sq / en.size());

  int loss_start = -1;
  int run = 0;
  for (std::size_t i = 0; i < en.size(); ++i) {
    if (en[i] > loss_ape) {
      if (++run == loss_run) {
        loss_start = static_cast<int>(i) - (loss_run - 1);
        break;
      }
    } else {
      run = 0;
    }
  }
  const std::size_t limit = loss_start >= 0 ? static_cast<std::size_t>(loss_start) : en.size();
  for (std::size_t i = 0; i < limit; ++i)
    report.detectable_distance = std::max(report.detectable_distance, truth_range[i]);
  return report;
}

MethodComparison compare_methods(const std::vector<MethodRow>& rows) {
  if (rows.size() < 2)
    throw std::invalid_argument("compare_methods: need at least two rows");

  MethodComparison cmp;
  cmp.rows = rows;

  const MethodRow* fused = nullptr;
  for (const MethodRow& r : rows)
    if (r.mode == "fused") fused = &r;
  cmp.has_fused = fused != nullptr;
  if (fused) {
    cmp.fused_best_mean = true;
    cmp.fused_best_rmse = true;
    for (const MethodRow& r : rows) {
      if (&r == fused) continue;
      if (fused->report.total_mean > r.report.total_mean) cmp.fused_best_mean = false;
      if (fused->report.total_rmse > r.report.total_rmse) cmp.fused_best_rmse = false;
      if (fused->report.total_mean == r.report.total_mean) cmp.mean_ties.push_back(r.mode);
    }
  }

  char line[160];
  std::snprintf(line, sizeof(line), "%-12s %10s %10s %10s %10s %10s\n", "mode", "dist_m",
                "mean_m", "rmse_m", "measured", "fps");
  cmp.table = line;
  for (const MethodRow& r : rows) {
    std::snprintf(line, sizeof(line), "%-12s %10.3f %10.4f %10.4f %9.1f%% %10.2f\n",
                  r.mode.c_str(), r.report.detectable_distance, r.report.total_mean,
                  r.report.total_rmse, 100.0 * r.report.measured_fraction, r.throughput_fps);
    cmp.table += line;
  }
  if (fused) {
    cmp.table += cmp.fused_best_mean && cmp.mean_ties.empty()
                     ? "verdict: fused lowest mean error\n"
                 : cmp.fused_best_mean
                     ? "verdict: fused tied for lowest mean error\n"
                     : "verdict: fused not lowest on mean error\n";
  }
  return cmp;
}

}  // namespace panotrack

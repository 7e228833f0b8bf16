#include "panotrack/cluster.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <random>
#include <stdexcept>
#include <unordered_map>

namespace panotrack {

namespace {

struct PlaneFit {
  Point3 normal;   // unit, oriented with positive z
  double offset = 0.0;  // plane is normal . p + offset = 0
  int inliers = 0;
};

double plane_dist(const PlaneFit& pl, const Point3& p) {
  return std::fabs(dot(pl.normal, p) + pl.offset);
}

// Least-squares plane through a consensus set: centroid plus the smallest
// principal direction of the scatter matrix.
PlaneFit refit_plane(const std::vector<Point3>& pts, const std::vector<int>& idx) {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (int i : idx) mean += Eigen::Vector3d(pts[i].x, pts[i].y, pts[i].z);
  mean /= static_cast<double>(idx.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (int i : idx) {
    Eigen::Vector3d d = Eigen::Vector3d(pts[i].x, pts[i].y, pts[i].z) - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  Eigen::Vector3d n = es.eigenvectors().col(0);
  if (n.z() < 0.0) n = -n;
  PlaneFit out;
  out.normal = Point3{n.x(), n.y(), n.z()};
  out.offset = -n.dot(mean);
  return out;
}

}  // namespace

std::vector<Point3> ground_removal(const std::vector<Point3>& pts, const GroundParams& params) {
  if (params.method == GroundMethod::kZThreshold) {
    std::vector<Point3> out;
    out.reserve(pts.size());
    for (const auto& p : pts) {
      if (p.z > params.z_cut) out.push_back(p);
    }
    return out;
  }

  if (pts.size() < 3) return pts;
  if (params.ransac_iters < 1) throw std::invalid_argument("ransac_iters must be >= 1");
  if (!(params.inlier_tol > 0.0)) throw std::invalid_argument("inlier_tol must be > 0");

  const double min_nz = std::cos(params.max_tilt);
  const int n = static_cast<int>(pts.size());
  // Fixed seed: the fit must not change between identical calls.
  std::mt19937 rng(0x5EEDu);
  std::uniform_int_distribution<int> pick(0, n - 1);

  PlaneFit best;
  for (int it = 0; it < params.ransac_iters; ++it) {
    const int a = pick(rng), b = pick(rng), c = pick(rng);
    if (a == b || a == c || b == c) continue;
    const Point3 u = pts[b] - pts[a];
    const Point3 v = pts[c] - pts[a];
    Point3 nrm{u.y * v.z - u.z * v.y, u.z * v.x - u.x * v.z, u.x * v.y - u.y * v.x};
    const double len = nrm.norm();
    if (len < 1e-12) continue;
    nrm = nrm * (1.0 / len);
    if (nrm.z < 0.0) nrm = nrm * -1.0;
    if (nrm.z < min_nz) continue;
    PlaneFit cand{nrm, -dot(nrm, pts[a]), 0};
    for (const auto& p : pts) {
      if (plane_dist(cand, p) <= params.inlier_tol) ++cand.inliers;
    }
    if (cand.inliers > best.inliers) best = cand;
  }
  if (best.inliers < 3) return pts;

  std::vector<int> consensus;
  consensus.reserve(best.inliers);
  for (int i = 0; i < n; ++i) {
    if (plane_dist(best, pts[i]) <= params.inlier_tol) consensus.push_back(i);
  }
  PlaneFit refined = refit_plane(pts, consensus);
  // The refit can only be trusted while it stays near-horizontal.
  if (refined.normal.z < min_nz) refined = best;

  std::vector<Point3> out;
  out.reserve(pts.size() - consensus.size());
  for (const auto& p : pts) {
    if (plane_dist(refined, p) > params.inlier_tol) out.push_back(p);
  }
  return out;
}

namespace {

// Uniform hash grid with cell edge eps; neighbor queries touch 27 cells.
class EpsGrid {
 public:
  EpsGrid(const std::vector<Point3>& pts, double eps) : pts_(pts), inv_(1.0 / eps), eps2_(eps * eps) {
    cells_.reserve(pts.size() * 2);
    for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
      cells_[key(pts[i])].push_back(i);
    }
  }

  // Indices within eps of pts[i], the point itself included, ascending.
  std::vector<int> neighbors(int i) const {
    const Point3& p = pts_[i];
    const std::int64_t cx = coord(p.x), cy = coord(p.y), cz = coord(p.z);
    std::vector<int> out;
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          auto it = cells_.find(pack(cx + dx, cy + dy, cz + dz));
          if (it == cells_.end()) continue;
          for (int j : it->second) {
            const Point3 d = pts_[j] - p;
            if (dot(d, d) <= eps2_) out.push_back(j);
          }
        }
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::int64_t coord(double v) const { return static_cast<std::int64_t>(std::floor(v * inv_)); }
  static std::uint64_t pack(std::int64_t x, std::int64_t y, std::int64_t z) {
    // 21 bits per axis covers +/- 1e6 cells, far beyond the sensor envelope.
    const std::uint64_t m = (1u << 21) - 1;
    return ((static_cast<std::uint64_t>(x) & m) << 42) | ((static_cast<std::uint64_t>(y) & m) << 21) |
           (static_cast<std::uint64_t>(z) & m);
  }
  std::uint64_t key(const Point3& p) const { return pack(coord(p.x), coord(p.y), coord(p.z)); }

  const std::vector<Point3>& pts_;
  double inv_;
  double eps2_;
  std::unordered_map<std::uint64_t, std::vector<int>> cells_;
};

}  // namespace

std::vector<Cluster> dbscan(const std::vector<Point3>& pts, double eps, int min_pts) {
  if (!(eps > 0.0)) throw std::invalid_argument("dbscan eps must be > 0");
  if (min_pts < 1) throw std::invalid_argument("dbscan min_pts must be >= 1");
  const int n = static_cast<int>(pts.size());
  if (n == 0) return {};

  EpsGrid grid(pts, eps);
  std::vector<std::vector<int>> nbr(n);
  std::vector<char> core(n, 0);
  for (int i = 0; i < n; ++i) {
    nbr[i] = grid.neighbors(i);
    core[i] = nbr[i].size() >= static_cast<std::size_t>(min_pts);
  }

  // Connected components over core points only.
  std::vector<int> label(n, -1);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    if (!core[i] || label[i] != -1) continue;
    const int id = next++;
    std::queue<int> q;
    label[i] = id;
    q.push(i);
    while (!q.empty()) {
      const int j = q.front();
      q.pop();
      for (int k : nbr[j]) {
        if (core[k] && label[k] == -1) {
          label[k] = id;
          q.push(k);
        }
      }
    }
  }

  // A non-core point joins the cluster of its lowest-index core neighbor.
  for (int i = 0; i < n; ++i) {
    if (core[i]) continue;
    for (int k : nbr[i]) {
      if (core[k]) {
        label[i] = label[k];
        break;
      }
    }
  }

  std::vector<Cluster> clusters(next);
  for (int i = 0; i < n; ++i) {
    if (label[i] < 0) continue;
    Cluster& cl = clusters[label[i]];
    cl.indices.push_back(static_cast<std::size_t>(i));
    cl.centroid = cl.centroid + pts[i];
  }
  for (auto& cl : clusters) {
    cl.count = cl.indices.size();
    cl.centroid = cl.centroid * (1.0 / static_cast<double>(cl.count));
    cl.range = cl.centroid.norm();
  }
  std::sort(clusters.begin(), clusters.end(),
            [](const Cluster& a, const Cluster& b) { return a.indices.front() < b.indices.front(); });
  return clusters;
}

SelectionOutcome select_cluster(const std::vector<Cluster>& candidates, std::size_t prev_count,
                                double prev_range, const AssocParams& assoc) {
  if (prev_count == 0) throw std::invalid_argument("select_cluster needs a non-empty previous cluster");

  SelectionOutcome out;
  bool have = false;
  double best_range_dev = std::numeric_limits<double>::infinity();
  std::size_t best_count_dev = 0;
  std::size_t best_first = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Cluster& cl = candidates[i];
    const std::size_t count_dev =
        cl.count > prev_count ? cl.count - prev_count : prev_count - cl.count;
    const double ratio = static_cast<double>(count_dev) / static_cast<double>(prev_count);
    if (ratio > assoc.max_count_ratio_dev) continue;
    const double range_dev = std::fabs(cl.range - prev_range);
    const std::size_t first = cl.indices.empty() ? 0 : cl.indices.front();
    const bool better = !have || range_dev < best_range_dev ||
                        (range_dev == best_range_dev && count_dev < best_count_dev) ||
                        (range_dev == best_range_dev && count_dev == best_count_dev && first < best_first);
    if (better) {
      have = true;
      best_range_dev = range_dev;
      best_count_dev = count_dev;
      best_first = first;
      out.cluster = cl;
      out.candidate_index = i;
    }
  }
  out.accepted = have && best_range_dev <= assoc.max_range_dev;
  if (!out.accepted) {
    out.cluster = Cluster{};
    if (!have) out.candidate_index = 0;
  }
  return out;
}

}  // namespace panotrack

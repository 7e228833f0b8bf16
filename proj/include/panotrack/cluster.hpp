#pragma once

#include <cstddef>
#include <vector>

#include "panotrack/geometry.hpp"

namespace panotrack {

enum class GroundMethod { kZThreshold, kPlaneRansac };

struct GroundParams {
  GroundMethod method = GroundMethod::kZThreshold;
  double z_cut = -0.6;       // m; kZThreshold drops points at or below this height
  int ransac_iters = 100;
  double inlier_tol = 0.05;  // m, point-to-plane distance
  double max_tilt = 20.0 * kPi / 180.0;  // rad, plane normal vs +z
};

// Frame-to-frame association gates. A candidate must first pass the relative
// population gate, then the winner must sit within the range gate.
struct AssocParams {
  double max_count_ratio_dev = 0.6;
  double max_range_dev = 0.8;  // m
};

struct ClusterParams {
  double eps = 0.35;  // m
  int min_pts = 3;    // neighborhood population, the point itself included
  GroundParams ground;
  AssocParams assoc;
};

struct Cluster {
  std::vector<std::size_t> indices;  // ascending positions into the clustered input
  Point3 centroid;
  std::size_t count = 0;
  double range = 0.0;  // centroid distance to the sensor origin
};

// Removes ground returns. kZThreshold cuts on height alone. kPlaneRansac fits
// the dominant near-horizontal plane (normal within max_tilt of +z, least
// squares refit over the consensus set) and drops its inliers; when no such
// plane gathers at least three inliers the input is returned unchanged.
// Survivor order matches input order. Deterministic for identical inputs.
std::vector<Point3> ground_removal(const std::vector<Point3>& pts, const GroundParams& params);

// Density clustering. A point is core when at least min_pts points (itself
// included) lie within eps. Clusters are the connected components of core
// points; a non-core point with core neighbors joins the cluster of its
// lowest-index core neighbor; the rest is noise and is not returned. Clusters
// are ordered by their smallest member index.
std::vector<Cluster> dbscan(const std::vector<Point3>& pts, double eps, int min_pts);

struct SelectionOutcome {
  bool accepted = false;           // mirrors the accepted/rejected flag
  Cluster cluster;                 // meaningful only when accepted
  std::size_t candidate_index = 0; // position in the candidate list
};

// Picks the candidate most consistent with the previous frame: population
// ratio gate first, then the smallest absolute range deviation wins (ties by
// smaller population deviation, then smaller first member index). Rejects
// everything when the winner's range deviation exceeds max_range_dev.
SelectionOutcome select_cluster(const std::vector<Cluster>& candidates, std::size_t prev_count,
                                double prev_range, const AssocParams& assoc);

}  // namespace panotrack

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "panotrack/cluster.hpp"

using namespace panotrack;

namespace {

// Reference clustering built straight from the definition: quadratic
// neighborhood search, explicit core set, breadth-first components over the
// eps-graph restricted to cores, then border attachment to the lowest-index
// core neighbor. Kept free of any code shared with the implementation.
std::vector<std::set<std::size_t>> dbscan_by_definition(const std::vector<Point3>& pts, double eps,
                                                        int min_pts) {
  const std::size_t n = pts.size();
  const double eps2 = eps * eps;
  std::vector<std::vector<std::size_t>> nbr(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const Point3 d = pts[i] - pts[j];
      if (dot(d, d) <= eps2) nbr[i].push_back(j);
    }
  }
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) core[i] = nbr[i].size() >= static_cast<std::size_t>(min_pts);

  std::vector<int> comp(n, -1);
  int ncomp = 0;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (!core[seed] || comp[seed] != -1) continue;
    std::vector<std::size_t> stack{seed};
    comp[seed] = ncomp;
    while (!stack.empty()) {
      const std::size_t j = stack.back();
      stack.pop_back();
      for (std::size_t k : nbr[j]) {
        if (core[k] && comp[k] == -1) {
          comp[k] = ncomp;
          stack.push_back(k);
        }
      }
    }
    ++ncomp;
  }

  std::vector<std::set<std::size_t>> groups(ncomp);
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) {
      groups[comp[i]].insert(i);
      continue;
    }
    for (std::size_t k : nbr[i]) {  // nbr is ascending by construction
      if (core[k]) {
        groups[comp[k]].insert(i);
        break;
      }
    }
  }
  std::vector<std::set<std::size_t>> out;
  for (auto& g : groups) {
    if (!g.empty()) out.push_back(std::move(g));
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return *a.begin() < *b.begin(); });
  return out;
}

std::vector<std::set<std::size_t>> as_sets(const std::vector<Cluster>& clusters) {
  std::vector<std::set<std::size_t>> out;
  for (const auto& cl : clusters) out.emplace_back(cl.indices.begin(), cl.indices.end());
  return out;
}

Cluster make_cluster(std::size_t count, double range, std::size_t first_index) {
  Cluster cl;
  cl.count = count;
  cl.range = range;
  cl.centroid = Point3{range, 0.0, 0.0};
  cl.indices.resize(count);
  for (std::size_t i = 0; i < count; ++i) cl.indices[i] = first_index + i;
  return cl;
}

}  // namespace

TEST_CASE("a sparse chain forms one cluster with two border ends") {
  // eps 0.35, min_pts 3: the middle points are core, the ends attach to them.
  std::vector<Point3> pts{{0.0, 0, 0}, {0.3, 0, 0}, {0.6, 0, 0}, {0.9, 0, 0}};
  auto clusters = dbscan(pts, 0.35, 3);
  REQUIRE(clusters.size() == 1);
  CHECK(clusters[0].indices == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(clusters[0].count == 4);
  CHECK(clusters[0].centroid.x == doctest::Approx(0.45));
  CHECK(clusters[0].range == doctest::Approx(0.45));
}

TEST_CASE("points without enough company are noise") {
  std::vector<Point3> pts{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  CHECK(dbscan(pts, 0.35, 3).empty());
  CHECK(dbscan({}, 0.35, 3).empty());
}

TEST_CASE("min_pts of one turns every point into a core point") {
  std::vector<Point3> pts{{0, 0, 0}, {0.2, 0, 0}, {5, 0, 0}};
  auto clusters = dbscan(pts, 0.35, 1);
  REQUIRE(clusters.size() == 2);
  CHECK(clusters[0].indices == std::vector<std::size_t>{0, 1});
  CHECK(clusters[1].indices == std::vector<std::size_t>{2});
}

TEST_CASE("dbscan validates its parameters") {
  std::vector<Point3> pts{{0, 0, 0}};
  CHECK_THROWS_AS(dbscan(pts, 0.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(dbscan(pts, -1.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(dbscan(pts, 0.3, 0), std::invalid_argument);
}

TEST_CASE("a contested border point follows its lowest-index core neighbor") {
  // Two five-point pads bridged by one point that reaches cores on both
  // sides; with min_pts 6 the bridge itself has only five neighbors and so
  // stays non-core. Its lowest-index core neighbor sits in the first pad.
  std::vector<Point3> pts;
  auto pad = [&](double ox, double oy) {
    pts.push_back({ox + 0.0, oy + 0.0, 0});
    pts.push_back({ox + 0.05, oy + 0.0, 0});
    pts.push_back({ox + 0.0, oy + 0.05, 0});
    pts.push_back({ox + 0.05, oy + 0.05, 0});
    pts.push_back({ox + 0.025, oy + 0.025, 0});
  };
  pad(0.0, 0.0);     // indices 0..4
  pad(0.35, 0.1);    // indices 5..9
  pts.push_back({0.2, 0.18, 0});  // the bridge, index 10

  auto clusters = dbscan(pts, 0.2, 6);
  auto oracle = dbscan_by_definition(pts, 0.2, 6);
  CHECK(as_sets(clusters) == oracle);
  REQUIRE(clusters.size() == 2);
  CHECK(clusters[0].indices == std::vector<std::size_t>{0, 1, 2, 3, 4, 10});
  CHECK(clusters[1].indices == std::vector<std::size_t>{5, 6, 7, 8, 9});
}

TEST_CASE("dbscan matches the definitional reference on random instances") {
  std::mt19937 rng(987654);
  std::uniform_int_distribution<int> usize(0, 200);
  std::uniform_real_distribution<double> ucoord(-2.0, 2.0);
  std::uniform_real_distribution<double> ueps(0.05, 0.6);
  std::uniform_int_distribution<int> umin(1, 6);
  std::uniform_int_distribution<int> umode(0, 1);
  std::normal_distribution<double> jitter(0.0, 0.08);

  for (int inst = 0; inst < 120; ++inst) {
    const int n = usize(rng);
    std::vector<Point3> pts;
    pts.reserve(n);
    if (umode(rng) == 0) {
      for (int i = 0; i < n; ++i) pts.push_back({ucoord(rng), ucoord(rng), ucoord(rng)});
    } else {
      // Blobby layouts stress border handling more than uniform noise does.
      std::vector<Point3> centers;
      for (int c = 0; c < 5; ++c) centers.push_back({ucoord(rng), ucoord(rng), ucoord(rng)});
      std::uniform_int_distribution<std::size_t> upick(0, centers.size() - 1);
      for (int i = 0; i < n; ++i) {
        const Point3& c = centers[upick(rng)];
        pts.push_back({c.x + jitter(rng), c.y + jitter(rng), c.z + jitter(rng)});
      }
    }
    const double eps = ueps(rng);
    const int min_pts = umin(rng);
    CHECK(as_sets(dbscan(pts, eps, min_pts)) == dbscan_by_definition(pts, eps, min_pts));
  }
}

TEST_CASE("height-threshold ground removal keeps a hovering object") {
  GroundParams gp;
  gp.method = GroundMethod::kZThreshold;
  gp.z_cut = -0.6;
  std::vector<Point3> pts;
  for (int i = 0; i < 50; ++i) pts.push_back({0.1 * i, 0.0, -1.0});
  pts.push_back({1.0, 1.0, 0.5});
  pts.push_back({1.1, 1.0, 0.4});
  auto out = ground_removal(pts, gp);
  REQUIRE(out.size() == 2);
  CHECK(out[0].z == doctest::Approx(0.5));
  CHECK(out[1].z == doctest::Approx(0.4));
}

TEST_CASE("height-threshold removal drops points exactly on the cut") {
  GroundParams gp;
  gp.method = GroundMethod::kZThreshold;
  gp.z_cut = -0.6;
  std::vector<Point3> pts{{0, 0, -0.6}, {0, 0, -0.59}};
  auto out = ground_removal(pts, gp);
  REQUIRE(out.size() == 1);
  CHECK(out[0].z == doctest::Approx(-0.59));
}

TEST_CASE("ransac ground removal strips a noisy floor and keeps the object") {
  GroundParams gp;
  gp.method = GroundMethod::kPlaneRansac;
  gp.ransac_iters = 100;
  gp.inlier_tol = 0.03;

  std::mt19937 rng(42);
  std::uniform_real_distribution<double> uxy(-5.0, 5.0);
  std::uniform_real_distribution<double> unz(-0.005, 0.005);
  std::vector<Point3> pts;
  for (int i = 0; i < 500; ++i) pts.push_back({uxy(rng), uxy(rng), -1.0 + unz(rng)});
  std::normal_distribution<double> blob(0.0, 0.05);
  for (int i = 0; i < 30; ++i) pts.push_back({2.0 + blob(rng), 1.0 + blob(rng), 0.5 + blob(rng)});

  auto out = ground_removal(pts, gp);
  int object = 0;
  int floor_left = 0;
  for (const auto& p : out) {
    if (p.z > -0.5) ++object; else ++floor_left;
  }
  CHECK(object == 30);
  CHECK(floor_left <= 5);  // at least 99% of 500 floor points removed
}

TEST_CASE("ransac ground removal ignores a vertical wall") {
  GroundParams gp;
  gp.method = GroundMethod::kPlaneRansac;
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<Point3> pts;
  for (int i = 0; i < 200; ++i) pts.push_back({2.0, u(rng), u(rng)});
  auto out = ground_removal(pts, gp);
  CHECK(out.size() == pts.size());
}

TEST_CASE("ransac ground removal passes tiny inputs through") {
  GroundParams gp;
  gp.method = GroundMethod::kPlaneRansac;
  std::vector<Point3> pts{{0, 0, 0}, {1, 0, 0}};
  CHECK(ground_removal(pts, gp).size() == 2);
}

TEST_CASE("selection follows the population gate then the range gate") {
  AssocParams assoc;  // 0.6 ratio, 0.8 m
  std::vector<Cluster> cands{make_cluster(48, 3.1, 0), make_cluster(100, 3.0, 48)};
  auto out = select_cluster(cands, 50, 3.0, assoc);
  REQUIRE(out.accepted);
  CHECK(out.candidate_index == 0);
  CHECK(out.cluster.count == 48);
  CHECK(out.cluster.range == doctest::Approx(3.1));
}

TEST_CASE("selection rejects when the best survivor is too far in range") {
  AssocParams assoc;
  std::vector<Cluster> cands{make_cluster(48, 4.0, 0)};
  auto out = select_cluster(cands, 50, 3.0, assoc);
  CHECK_FALSE(out.accepted);
}

TEST_CASE("selection rejects when every candidate fails the population gate") {
  AssocParams assoc;
  std::vector<Cluster> cands{make_cluster(10, 3.0, 0), make_cluster(200, 3.0, 10)};
  auto out = select_cluster(cands, 50, 3.0, assoc);
  CHECK_FALSE(out.accepted);
}

TEST_CASE("selection handles an empty candidate list") {
  AssocParams assoc;
  auto out = select_cluster({}, 50, 3.0, assoc);
  CHECK_FALSE(out.accepted);
}

TEST_CASE("selection breaks range ties by population then first index") {
  AssocParams assoc;
  std::vector<Cluster> a{make_cluster(40, 3.5, 0), make_cluster(45, 2.5, 40)};
  // Same |range - 3.0| on both; 45 is closer to 50 than 40 is.
  auto out = select_cluster(a, 50, 3.0, assoc);
  REQUIRE(out.accepted);
  CHECK(out.candidate_index == 1);

  std::vector<Cluster> b{make_cluster(45, 3.5, 7), make_cluster(45, 2.5, 60)};
  // Full tie on range and population: the earlier first member wins.
  auto out2 = select_cluster(b, 50, 3.0, assoc);
  REQUIRE(out2.accepted);
  CHECK(out2.candidate_index == 0);
}

TEST_CASE("selection refuses a zero previous population") {
  CHECK_THROWS_AS(select_cluster({}, 0, 3.0, AssocParams{}), std::invalid_argument);
}

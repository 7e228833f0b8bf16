#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "panotrack/sim.hpp"

using namespace panotrack;

namespace {

SceneSpec plain_scene() {
  SceneSpec scene;
  scene.ground_z = -1.0;
  scene.noise.range_sigma = 0.0;
  scene.noise.dropout_prob = 0.0;
  scene.rng_seed = 11;
  return scene;
}

bool scans_equal(const PanoramicScan& a, const PanoramicScan& b) {
  if (a.rows != b.rows || a.cols != b.cols) return false;
  for (std::size_t i = 0; i < a.valid.size(); ++i) {
    if (a.valid[i] != b.valid[i] || a.range[i] != b.range[i] || a.signal[i] != b.signal[i]) return false;
    if (a.points[i].x != b.points[i].x || a.points[i].y != b.points[i].y || a.points[i].z != b.points[i].z) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("an elliptical path starts on the major axis moving tangentially") {
  TrajectorySpec spec;
  spec.kind = TrajectoryKind::kElliptical;
  spec.center = {2.0, -1.0, 0.0};
  spec.radius_a = spec.radius_b = 1.5;
  spec.angular_rate = 0.7;
  spec.z0 = 0.4;
  auto s = trajectory_at(spec, 0.0);
  CHECK(s.position.x == doctest::Approx(3.5));
  CHECK(s.position.y == doctest::Approx(-1.0));
  CHECK(s.position.z == doctest::Approx(0.4));
  CHECK(s.velocity.x == doctest::Approx(0.0));
  CHECK(s.velocity.y == doctest::Approx(1.5 * 0.7));
  CHECK(s.velocity.z == doctest::Approx(0.0));
}

TEST_CASE("a spiral climbs linearly over its duration") {
  TrajectorySpec spec;
  spec.kind = TrajectoryKind::kSpiral;
  spec.climb_rate = 0.05;
  spec.z0 = -0.3;
  spec.duration = 20.0;
  auto a = trajectory_at(spec, 0.0);
  auto b = trajectory_at(spec, 20.0);
  CHECK(b.position.z - a.position.z == doctest::Approx(0.05 * 20.0));
  CHECK(b.velocity.z == doctest::Approx(0.05));
}

TEST_CASE("trajectory sampling is uniform and spans the whole duration") {
  TrajectorySpec spec;
  spec.duration = 3.0;
  spec.sample_rate = 100.0;
  auto traj = make_trajectory(spec);
  REQUIRE(traj.size() == 301);
  CHECK(traj.front().t == doctest::Approx(0.0));
  CHECK(traj.back().t == doctest::Approx(3.0));
  for (std::size_t i = 1; i < traj.size(); ++i) {
    CHECK(traj[i].t - traj[i - 1].t == doctest::Approx(0.01));
  }
}

TEST_CASE("velocity matches a central difference of position") {
  TrajectorySpec spec;
  spec.kind = TrajectoryKind::kSpiral;
  spec.center = {-3.0, 0.5, 0.0};
  spec.radius_a = 2.0;
  spec.radius_b = 1.2;
  spec.angular_rate = 0.8;
  spec.climb_rate = 0.04;
  const double h = 1e-5;
  for (double t : {0.7, 5.3, 12.9}) {
    auto m = trajectory_at(spec, t);
    auto lo = trajectory_at(spec, t - h);
    auto hi = trajectory_at(spec, t + h);
    CHECK(m.velocity.x == doctest::Approx((hi.position.x - lo.position.x) / (2 * h)).epsilon(1e-5));
    CHECK(m.velocity.y == doctest::Approx((hi.position.y - lo.position.y) / (2 * h)).epsilon(1e-5));
    CHECK(m.velocity.z == doctest::Approx((hi.position.z - lo.position.z) / (2 * h)).epsilon(1e-5));
  }
}

TEST_CASE("time past the end clamps to a hover at the final pose") {
  TrajectorySpec spec;
  spec.duration = 10.0;
  auto end = trajectory_at(spec, 10.0);
  auto later = trajectory_at(spec, 14.0);
  CHECK(later.position.x == doctest::Approx(end.position.x));
  CHECK(later.velocity.x == 0.0);
  CHECK(later.velocity.y == 0.0);
}

TEST_CASE("trajectory validation rejects bad fields") {
  TrajectorySpec spec;
  spec.radius_a = 0.0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = TrajectorySpec{};
  spec.kind = TrajectoryKind::kElliptical;
  spec.climb_rate = 0.1;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = TrajectorySpec{};
  spec.duration = -1.0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("the return budget falls off with the square of range") {
  CHECK(uav_point_count_model(1.0, 300.0) == 300);
  CHECK(uav_point_count_model(3.5, 300.0) == 24);
  CHECK(uav_point_count_model(7.0, 300.0) == 6);
  CHECK(uav_point_count_model(100.0, 300.0) == 0);
  CHECK_THROWS_AS(uav_point_count_model(0.0, 300.0), std::invalid_argument);
}

TEST_CASE("scene validation rejects out-of-domain fields") {
  SceneSpec scene;
  CHECK_NOTHROW(scene.validate());
  scene.ground_z = 0.5;
  CHECK_THROWS_AS(scene.validate(), std::invalid_argument);
  scene = SceneSpec{};
  scene.noise.dropout_prob = 1.0;
  CHECK_THROWS_AS(scene.validate(), std::invalid_argument);
  scene = SceneSpec{};
  scene.boxes.push_back({{1, 1, 0}, {0.0, 1.0, 1.0}});
  CHECK_THROWS_AS(scene.validate(), std::invalid_argument);
}

TEST_CASE("rendering is reproducible per frame index") {
  SceneSpec scene = plain_scene();
  scene.noise.range_sigma = 0.02;
  scene.noise.dropout_prob = 0.05;
  SensorIntrinsics intr;
  intr.rows = 32;
  intr.cols = 256;
  ScanRenderer renderer(scene, intr);
  GroundTruthSample uav;
  uav.position = {3.0, 0.5, 0.2};

  auto a = renderer.render(uav, 7, 0.7);
  auto b = renderer.render(uav, 7, 0.7);
  auto c = renderer.render(uav, 8, 0.8);
  CHECK(scans_equal(a, b));
  CHECK_FALSE(scans_equal(a, c));
}

TEST_CASE("a noise-free ground return sits at the analytic range") {
  SceneSpec scene = plain_scene();
  SensorIntrinsics intr;
  ScanRenderer renderer(scene, intr);
  GroundTruthSample uav;
  uav.position = {0.0, 0.0, 100.0};  // far outside the envelope
  auto scan = renderer.render(uav, 0, 0.0);

  // Row 100 center elevation is below the horizon and must see the floor.
  const int row = 100;
  const double el = intr.fov_vertical / 2 - (row + 0.5) * intr.row_res();
  REQUIRE(el < 0.0);
  const double expected = -scene.ground_z / std::sin(-el);
  int checked = 0;
  for (int col = 0; col < intr.cols; col += 37) {
    const std::size_t i = scan.index(row, col);
    REQUIRE(scan.valid[i] == 1);
    CHECK(scan.range[i] == doctest::Approx(expected).epsilon(1e-5));
    ++checked;
  }
  CHECK(checked > 10);

  // Rows looking upward see nothing in an empty scene.
  for (int col = 0; col < intr.cols; ++col) CHECK(scan.valid[scan.index(10, col)] == 0);
}

TEST_CASE("every valid pixel's point projects back to the same pixel") {
  SceneSpec scene = plain_scene();
  scene.noise.range_sigma = 0.02;
  scene.boxes.push_back({{2.5, 1.0, -0.2}, {0.5, 0.5, 1.6}});
  scene.spheres.push_back({{-2.0, 2.0, 0.3}, 0.4});
  SensorIntrinsics intr;
  ScanRenderer renderer(scene, intr);
  GroundTruthSample uav;
  uav.position = {2.0, -1.5, 0.1};
  auto scan = renderer.render(uav, 3, 0.3);

  int valid = 0;
  int mismatched = 0;
  for (int r = 0; r < scan.rows; ++r) {
    for (int c = 0; c < scan.cols; ++c) {
      const std::size_t i = scan.index(r, c);
      if (!scan.valid[i]) continue;
      ++valid;
      auto px = project(scan.points[i], intr);
      if (!px || px->row != r || px->col != c) ++mismatched;
    }
  }
  CHECK(valid > 1000);
  CHECK(mismatched == 0);
}

TEST_CASE("the target owns roughly the modeled number of pixels") {
  SceneSpec scene = plain_scene();
  SensorIntrinsics intr;
  ScanRenderer renderer(scene, intr);

  for (double range : {2.5, 4.0, 7.0}) {
    const int expected = uav_point_count_model(range, scene.point_budget_k);
    double total = 0;
    const int trials = 60;
    for (int k = 0; k < trials; ++k) {
      GroundTruthSample uav;
      const double az = 0.1 * k;
      uav.position = {range * std::cos(az), range * std::sin(az), 0.15 * ((k % 5) - 2)};
      std::vector<PixelCoord> pixels;
      renderer.render(uav, static_cast<std::uint32_t>(k), 0.1 * k, &pixels);
      total += static_cast<double>(pixels.size());
    }
    const double mean = total / trials;
    CHECK(mean >= 0.7 * expected);
    CHECK(mean <= 1.3 * expected);
  }
}

TEST_CASE("target pixels form the brightest intensity band") {
  SceneSpec scene = plain_scene();
  scene.noise.range_sigma = 0.02;
  scene.boxes.push_back({{1.5, -1.5, -0.3}, {0.6, 0.6, 1.4}});
  SensorIntrinsics intr;
  ScanRenderer renderer(scene, intr);
  GroundTruthSample uav;
  uav.position = {3.0, 1.0, 0.2};
  std::vector<PixelCoord> pixels;
  auto scan = renderer.render(uav, 0, 0.0, &pixels);
  REQUIRE(pixels.size() > 5);

  float min_uav = 1.0f;
  for (const auto& px : pixels) min_uav = std::min(min_uav, scan.signal[scan.index(px.row, px.col)]);
  float max_other = 0.0f;
  for (int r = 0; r < scan.rows; ++r) {
    for (int c = 0; c < scan.cols; ++c) {
      const std::size_t i = scan.index(r, c);
      if (!scan.valid[i]) continue;
      bool is_uav = false;
      for (const auto& px : pixels) {
        if (px.row == r && px.col == c) { is_uav = true; break; }
      }
      if (!is_uav) max_other = std::max(max_other, scan.signal[i]);
    }
  }
  CHECK(min_uav > max_other);
}

TEST_CASE("signal decays with range on the same surface") {
  SceneSpec scene = plain_scene();
  SensorIntrinsics intr;
  ScanRenderer renderer(scene, intr);
  GroundTruthSample uav;
  uav.position = {0.0, 0.0, 100.0};
  auto scan = renderer.render(uav, 0, 0.0);

  // Lower rows hit the floor closer to the sensor, hence brighter.
  double near_sig = 0, far_sig = 0;
  int n_near = 0, n_far = 0;
  for (int c = 0; c < scan.cols; ++c) {
    const std::size_t lo = scan.index(intr.rows - 1, c);
    if (scan.valid[lo]) { near_sig += scan.signal[lo]; ++n_near; }
    const std::size_t hi = scan.index(70, c);
    if (scan.valid[hi]) { far_sig += scan.signal[hi]; ++n_far; }
  }
  REQUIRE(n_near > 0);
  REQUIRE(n_far > 0);
  CHECK(near_sig / n_near > far_sig / n_far);
}

TEST_CASE("dropout removes close to the configured share of returns") {
  SceneSpec scene = plain_scene();
  scene.noise.dropout_prob = 0.5;
  SensorIntrinsics intr;
  ScanRenderer with(scene, intr);
  scene.noise.dropout_prob = 0.0;
  ScanRenderer without(scene, intr);
  GroundTruthSample uav;
  uav.position = {0.0, 0.0, 100.0};

  auto count_valid = [](const PanoramicScan& s) {
    return std::accumulate(s.valid.begin(), s.valid.end(), 0);
  };
  const double kept = static_cast<double>(count_valid(with.render(uav, 0, 0.0))) /
                      static_cast<double>(count_valid(without.render(uav, 0, 0.0)));
  CHECK(kept > 0.45);
  CHECK(kept < 0.55);
}

TEST_CASE("a wall in front of the target occludes its returns") {
  SceneSpec scene = plain_scene();
  scene.boxes.push_back({{2.0, 0.0, 0.0}, {0.2, 3.0, 3.0}});
  SensorIntrinsics intr;
  ScanRenderer renderer(scene, intr);
  GroundTruthSample uav;
  uav.position = {4.0, 0.0, 0.0};  // dead behind the wall
  std::vector<PixelCoord> pixels;
  renderer.render(uav, 0, 0.0, &pixels);
  CHECK(pixels.empty());
}

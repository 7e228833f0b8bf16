#include "panotrack/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <unordered_set>

#include "panotrack/rng.hpp"

namespace panotrack {

namespace {

constexpr double kSignalFalloff = 30.0;  // m
constexpr double kSignalNoise = 0.01;

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  double reflectivity = 0.0;
};

void ray_ground(const Point3& d, double ground_z, Hit& best) {
  if (d.z >= -1e-9) return;
  const double t = ground_z / d.z;
  if (t > 0.0 && t < best.t) best = {t, ScanRenderer::kGroundReflectivity};
}

void ray_box(const Point3& d, const BoxObstacle& box, Hit& best) {
  double tmin = 0.0;
  double tmax = std::numeric_limits<double>::infinity();
  const double dc[3] = {d.x, d.y, d.z};
  const double cc[3] = {box.center.x, box.center.y, box.center.z};
  const double hs[3] = {box.size.x / 2, box.size.y / 2, box.size.z / 2};
  for (int a = 0; a < 3; ++a) {
    const double lo = cc[a] - hs[a], hi = cc[a] + hs[a];
    if (std::fabs(dc[a]) < 1e-12) {
      if (lo > 0.0 || hi < 0.0) return;  // ray parallel and outside the slab
      continue;
    }
    double t1 = lo / dc[a], t2 = hi / dc[a];
    if (t1 > t2) std::swap(t1, t2);
    tmin = std::max(tmin, t1);
    tmax = std::min(tmax, t2);
    if (tmin > tmax) return;
  }
  if (tmin > 0.0 && tmin < best.t) best = {tmin, ScanRenderer::kObstacleReflectivity};
}

void ray_sphere(const Point3& d, const SphereObstacle& sp, Hit& best) {
  const double b = dot(d, sp.center);
  const double c = dot(sp.center, sp.center) - sp.radius * sp.radius;
  const double disc = b * b - c;
  if (disc < 0.0) return;
  const double root = std::sqrt(disc);
  double t = b - root;
  if (t <= 0.0) t = b + root;
  if (t > 0.0 && t < best.t) best = {t, ScanRenderer::kObstacleReflectivity};
}

}  // namespace

void TrajectorySpec::validate() const {
  if (!(radius_a > 0.0) || !(radius_b > 0.0)) throw std::invalid_argument("trajectory radii must be > 0");
  if (!(duration > 0.0)) throw std::invalid_argument("trajectory duration must be > 0");
  if (!(sample_rate > 0.0)) throw std::invalid_argument("trajectory sample_rate must be > 0");
  if (!std::isfinite(angular_rate)) throw std::invalid_argument("trajectory angular_rate must be finite");
  if (kind == TrajectoryKind::kElliptical && climb_rate != 0.0) {
    throw std::invalid_argument("climb_rate applies to spiral trajectories only");
  }
}

void SceneSpec::validate() const {
  if (!(ground_z < 0.0)) throw std::invalid_argument("scene ground_z must lie below the sensor");
  if (!(uav.arm_span > 0.0) || !(uav.body_radius > 0.0)) {
    throw std::invalid_argument("scene uav dimensions must be > 0");
  }
  if (!(noise.range_sigma >= 0.0)) throw std::invalid_argument("scene range_sigma must be >= 0");
  if (!(noise.dropout_prob >= 0.0) || !(noise.dropout_prob < 1.0)) {
    throw std::invalid_argument("scene dropout_prob must lie in [0, 1)");
  }
  if (!(point_budget_k > 0.0)) throw std::invalid_argument("scene point_budget_k must be > 0");
  for (const auto& b : boxes) {
    if (!(b.size.x > 0.0) || !(b.size.y > 0.0) || !(b.size.z > 0.0)) {
      throw std::invalid_argument("scene box sizes must be > 0");
    }
  }
  for (const auto& s : spheres) {
    if (!(s.radius > 0.0)) throw std::invalid_argument("scene sphere radii must be > 0");
  }
}

GroundTruthSample trajectory_at(const TrajectorySpec& spec, double t) {
  GroundTruthSample out;
  out.t = t;
  const bool past_end = t > spec.duration;
  const double tc = past_end ? spec.duration : t;
  const double u = spec.angular_rate * tc;
  const double climb = spec.kind == TrajectoryKind::kSpiral ? spec.climb_rate : 0.0;
  out.position = {spec.center.x + spec.radius_a * std::cos(u),
                  spec.center.y + spec.radius_b * std::sin(u), spec.z0 + climb * tc};
  if (past_end) {
    out.velocity = {0.0, 0.0, 0.0};
  } else {
    const double w = spec.angular_rate;
    out.velocity = {-spec.radius_a * w * std::sin(u), spec.radius_b * w * std::cos(u), climb};
  }
  return out;
}

std::vector<GroundTruthSample> make_trajectory(const TrajectorySpec& spec) {
  spec.validate();
  const int n = static_cast<int>(std::floor(spec.duration * spec.sample_rate + 1e-9)) + 1;
  std::vector<GroundTruthSample> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(trajectory_at(spec, i / spec.sample_rate));
  return out;
}

int uav_point_count_model(double range, double k) {
  if (!(range > 0.0)) throw std::invalid_argument("uav_point_count_model needs range > 0");
  const long n = std::lround(k / (range * range));
  return n < 0 ? 0 : static_cast<int>(n);
}

double ScanRenderer::signal_level(double reflectivity, double range) {
  return reflectivity * std::exp(-range / kSignalFalloff);
}

ScanRenderer::ScanRenderer(const SceneSpec& scene, const SensorIntrinsics& intr)
    : scene_(scene), intr_(intr), table_(intr) {
  scene_.validate();
  intr_.validate();
}

PanoramicScan ScanRenderer::render(const GroundTruthSample& uav, std::uint32_t frame_index,
                                   double timestamp, std::vector<PixelCoord>* uav_pixels) const {
  PanoramicScan scan;
  scan.allocate(intr_.rows, intr_.cols);
  scan.timestamp = timestamp;
  scan.frame_index = frame_index;

  auto bg_rng = stream_rng(scene_.rng_seed, frame_index, RngStream::kBackground);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (int r = 0; r < intr_.rows; ++r) {
    for (int c = 0; c < intr_.cols; ++c) {
      const Point3& d = table_.dir(r, c);
      Hit hit;
      ray_ground(d, scene_.ground_z, hit);
      for (const auto& box : scene_.boxes) ray_box(d, box, hit);
      for (const auto& sp : scene_.spheres) ray_sphere(d, sp, hit);
      if (!(hit.t >= intr_.min_range) || hit.t > intr_.max_range) continue;
      if (u01(bg_rng) < scene_.noise.dropout_prob) continue;
      const double range = hit.t + scene_.noise.range_sigma * gauss(bg_rng);
      if (range < intr_.min_range || range > intr_.max_range) continue;
      const std::size_t i = scan.index(r, c);
      scan.valid[i] = 1;
      scan.range[i] = static_cast<float>(range);
      scan.points[i] = d * range;
      const double sig = signal_level(hit.reflectivity, range) + kSignalNoise * gauss(bg_rng);
      scan.signal[i] = static_cast<float>(std::clamp(sig, 0.0, 1.0));
    }
  }

  // Target scatter: samples drawn on the body sphere and the two cross bars,
  // binned into pixels, nearest return per pixel, occluded by closer static
  // geometry.
  const double r_uav = uav.position.norm();
  if (r_uav > 1e-6) {
    const int n_samples = uav_point_count_model(r_uav, scene_.point_budget_k);
    auto uav_rng = stream_rng(scene_.rng_seed, frame_index, RngStream::kUavScatter);
    std::uniform_real_distribution<double> su01(0.0, 1.0);
    std::normal_distribution<double> sg(0.0, 1.0);
    const double arm_half = scene_.uav.arm_span / 2.0;

    std::unordered_set<std::size_t> uav_owned;
    std::vector<std::size_t> claim_order;
    for (int s = 0; s < n_samples; ++s) {
      Point3 offset;
      if (su01(uav_rng) < 0.4) {
        // Uniform draw inside the body sphere.
        Point3 dir{sg(uav_rng), sg(uav_rng), sg(uav_rng)};
        const double len = dir.norm();
        if (len < 1e-12) continue;
        const double rad = scene_.uav.body_radius * std::cbrt(su01(uav_rng));
        offset = dir * (rad / len);
      } else {
        const int arm = static_cast<int>(su01(uav_rng) * 4.0) % 4;
        const double along = su01(uav_rng) * arm_half;
        const double j1 = 0.01 * sg(uav_rng), j2 = 0.01 * sg(uav_rng);
        switch (arm) {
          case 0: offset = {along, j1, j2}; break;
          case 1: offset = {-along, j1, j2}; break;
          case 2: offset = {j1, along, j2}; break;
          default: offset = {j1, -along, j2}; break;
        }
      }
      if (su01(uav_rng) < scene_.noise.dropout_prob) continue;

      const Point3 world = uav.position + offset;
      const auto px = project(world, intr_);
      if (!px) continue;
      const double true_range = world.norm();
      const double range = true_range + scene_.noise.range_sigma * sg(uav_rng);
      if (range < intr_.min_range || range > intr_.max_range) continue;

      // Re-cast the static scene along this exact ray for occlusion.
      const Point3 dir = world * (1.0 / true_range);
      Hit blocker;
      ray_ground(dir, scene_.ground_z, blocker);
      for (const auto& box : scene_.boxes) ray_box(dir, box, blocker);
      for (const auto& sp : scene_.spheres) ray_sphere(dir, sp, blocker);
      if (blocker.t < true_range) continue;

      const std::size_t i = scan.index(px->row, px->col);
      const bool owned = uav_owned.count(i) > 0;
      if (scan.valid[i]) {
        if (!owned && scan.range[i] < range) continue;   // behind the static hit
        if (owned && scan.range[i] <= range) continue;   // a nearer sample holds the pixel
      }
      if (!owned) {
        uav_owned.insert(i);
        claim_order.push_back(i);
      }
      scan.valid[i] = 1;
      scan.range[i] = static_cast<float>(range);
      scan.points[i] = dir * range;
      const double sig = signal_level(kUavReflectivity, range) + kSignalNoise * sg(uav_rng);
      scan.signal[i] = static_cast<float>(std::clamp(sig, 0.0, 1.0));
    }
    if (uav_pixels) {
      uav_pixels->clear();
      uav_pixels->reserve(claim_order.size());
      for (std::size_t i : claim_order) {
        uav_pixels->push_back({static_cast<int>(i / intr_.cols), static_cast<int>(i % intr_.cols)});
      }
    }
  } else if (uav_pixels) {
    uav_pixels->clear();
  }

  return scan;
}

}  // namespace panotrack

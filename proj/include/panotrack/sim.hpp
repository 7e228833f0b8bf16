#pragma once

#include <cstdint>
#include <vector>

#include "panotrack/geometry.hpp"

namespace panotrack {

enum class TrajectoryKind { kSpiral, kElliptical };

// Closed-form flight path: an ellipse in the horizontal plane, either at a
// fixed height (elliptical) or climbing linearly (spiral). The orbit center
// only contributes x and y; height comes from z0 and the climb term.
struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::kSpiral;
  Point3 center;               // m, orbit center (z component unused)
  double radius_a = 3.0;       // m, half axis along x
  double radius_b = 3.0;       // m, half axis along y
  double angular_rate = 0.5;   // rad/s
  double climb_rate = 0.0;     // m/s, spiral only
  double z0 = 0.0;             // m, height at t = 0
  double duration = 30.0;      // s
  double sample_rate = 100.0;  // Hz

  void validate() const;  // throws std::invalid_argument
};

struct GroundTruthSample {
  double t = 0.0;
  Point3 position;
  Point3 velocity;
};

// Pose at any time. Times past the end clamp to the final position with zero
// velocity, so padded sequences read as a hover at the last waypoint.
GroundTruthSample trajectory_at(const TrajectorySpec& spec, double t);

// Uniform samples at spec.sample_rate from t = 0 through spec.duration.
std::vector<GroundTruthSample> make_trajectory(const TrajectorySpec& spec);

struct UavShape {
  double arm_span = 0.5;     // m, tip-to-tip across both cross bars
  double body_radius = 0.12; // m
};

struct BoxObstacle {
  Point3 center;
  Point3 size;  // full extents, axis aligned
};

struct SphereObstacle {
  Point3 center;
  double radius = 0.5;
};

struct NoiseModel {
  double range_sigma = 0.02;  // m, along-ray
  double dropout_prob = 0.02; // per-return loss probability
};

struct SceneSpec {
  double ground_z = -1.0;  // m, must lie below the sensor
  UavShape uav;
  std::vector<BoxObstacle> boxes;
  std::vector<SphereObstacle> spheres;
  NoiseModel noise;
  double point_budget_k = 300.0;  // expected UAV returns at 1 m
  std::uint64_t rng_seed = 1;

  void validate() const;  // throws std::invalid_argument
};

// Expected number of returns from the target at the given range: inverse
// square falloff of a fixed budget, rounded, never negative. Throws on a
// non-positive range.
int uav_point_count_model(double range, double k);

// Panoramic scan synthesis. Static surfaces (ground plane, boxes, spheres)
// are ray cast through every pixel's bin center; the target contributes a
// scatter of surface samples binned into pixels, occluded by nearer static
// hits. All randomness is re-derived from (scene.rng_seed, frame_index), so
// renders are reproducible frame by frame and safe to run concurrently.
class ScanRenderer {
 public:
  ScanRenderer(const SceneSpec& scene, const SensorIntrinsics& intr);

  // uav_pixels, when given, receives the pixels the target ended up owning.
  PanoramicScan render(const GroundTruthSample& uav, std::uint32_t frame_index, double timestamp,
                       std::vector<PixelCoord>* uav_pixels = nullptr) const;

  const SensorIntrinsics& intrinsics() const { return intr_; }
  const SceneSpec& scene() const { return scene_; }

  // Signal model shared with the detector defaults: intensity decays
  // exponentially with range from a per-surface reflectivity.
  static double signal_level(double reflectivity, double range);
  static constexpr double kGroundReflectivity = 0.35;
  static constexpr double kObstacleReflectivity = 0.5;
  static constexpr double kUavReflectivity = 0.9;

 private:
  SceneSpec scene_;
  SensorIntrinsics intr_;
  DirectionTable table_;
};

}  // namespace panotrack

#include "panotrack/scenario.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace panotrack {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::invalid_argument(path + ": " + what);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

// Strictness lives here: every parser declares the keys it understands and
// anything else in the object is an error naming the offending path.
void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return it.key() == k; });
    if (!known) fail("scenario", "unknown key \"" + join(path, it.key()) + "\"");
  }
}

template <typename T>
void read_field(const json& j, const std::string& path, const char* key, T& out) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    it->get_to(out);
  } catch (const json::exception&) {
    fail(join(path, key), "wrong type");
  }
}

void read_point(const json& j, const std::string& path, const char* key, Point3& out) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_array() || it->size() != 3)
    fail(join(path, key), "expected an array of three numbers");
  try {
    out.x = (*it)[0].get<double>();
    out.y = (*it)[1].get<double>();
    out.z = (*it)[2].get<double>();
  } catch (const json::exception&) {
    fail(join(path, key), "expected an array of three numbers");
  }
}

std::string read_enum(const json& j, const std::string& path, const char* key,
                      const std::string& fallback) {
  std::string value = fallback;
  read_field(j, path, key, value);
  return value;
}

void parse_sensor(const json& j, const std::string& path, SensorIntrinsics& out) {
  require_object(j, path);
  check_keys(j, path, {"rows", "cols", "fov_vertical", "frame_rate", "min_range", "max_range"});
  read_field(j, path, "rows", out.rows);
  read_field(j, path, "cols", out.cols);
  read_field(j, path, "fov_vertical", out.fov_vertical);
  read_field(j, path, "frame_rate", out.frame_rate);
  read_field(j, path, "min_range", out.min_range);
  read_field(j, path, "max_range", out.max_range);
}

void parse_scene(const json& j, const std::string& path, SceneSpec& out) {
  require_object(j, path);
  check_keys(j, path, {"ground_z", "point_budget_k", "uav", "boxes", "spheres", "noise"});
  read_field(j, path, "ground_z", out.ground_z);
  read_field(j, path, "point_budget_k", out.point_budget_k);
  if (auto it = j.find("uav"); it != j.end()) {
    const std::string p = join(path, "uav");
    require_object(*it, p);
    check_keys(*it, p, {"arm_span", "body_radius"});
    read_field(*it, p, "arm_span", out.uav.arm_span);
    read_field(*it, p, "body_radius", out.uav.body_radius);
  }
  if (auto it = j.find("noise"); it != j.end()) {
    const std::string p = join(path, "noise");
    require_object(*it, p);
    check_keys(*it, p, {"range_sigma", "dropout_prob"});
    read_field(*it, p, "range_sigma", out.noise.range_sigma);
    read_field(*it, p, "dropout_prob", out.noise.dropout_prob);
  }
  if (auto it = j.find("boxes"); it != j.end()) {
    const std::string p = join(path, "boxes");
    if (!it->is_array()) fail(p, "expected an array");
    out.boxes.clear();
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string pi = p + "[" + std::to_string(i) + "]";
      const json& bj = (*it)[i];
      require_object(bj, pi);
      check_keys(bj, pi, {"center", "size"});
      BoxObstacle box;
      read_point(bj, pi, "center", box.center);
      read_point(bj, pi, "size", box.size);
      out.boxes.push_back(box);
    }
  }
  if (auto it = j.find("spheres"); it != j.end()) {
    const std::string p = join(path, "spheres");
    if (!it->is_array()) fail(p, "expected an array");
    out.spheres.clear();
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string pi = p + "[" + std::to_string(i) + "]";
      const json& sj = (*it)[i];
      require_object(sj, pi);
      check_keys(sj, pi, {"center", "radius"});
      SphereObstacle sph;
      read_point(sj, pi, "center", sph.center);
      read_field(sj, pi, "radius", sph.radius);
      out.spheres.push_back(sph);
    }
  }
}

void parse_trajectory(const json& j, const std::string& path, TrajectorySpec& out) {
  require_object(j, path);
  check_keys(j, path, {"kind", "center", "radius_a", "radius_b", "angular_rate", "climb_rate",
                       "z0", "duration", "sample_rate"});
  const std::string kind = read_enum(j, path, "kind", "spiral");
  if (kind == "spiral")
    out.kind = TrajectoryKind::kSpiral;
  else if (kind == "elliptical")
    out.kind = TrajectoryKind::kElliptical;
  else
    fail(join(path, "kind"), "expected \"spiral\" or \"elliptical\"");
  read_point(j, path, "center", out.center);
  read_field(j, path, "radius_a", out.radius_a);
  read_field(j, path, "radius_b", out.radius_b);
  read_field(j, path, "angular_rate", out.angular_rate);
  read_field(j, path, "climb_rate", out.climb_rate);
  read_field(j, path, "z0", out.z0);
  read_field(j, path, "duration", out.duration);
  read_field(j, path, "sample_rate", out.sample_rate);
}

void parse_detector(const json& j, const std::string& path, DetectorConfig& out) {
  require_object(j, path);
  check_keys(j, path, {"mode", "blob", "simulated", "detection_dropout"});
  const std::string mode = read_enum(j, path, "mode", "blob");
  if (mode == "blob")
    out.mode = DetectorMode::kBlob;
  else if (mode == "simulated")
    out.mode = DetectorMode::kSimulated;
  else
    fail(join(path, "mode"), "expected \"blob\" or \"simulated\"");
  read_field(j, path, "detection_dropout", out.detection_dropout);
  if (auto it = j.find("blob"); it != j.end()) {
    const std::string p = join(path, "blob");
    require_object(*it, p);
    check_keys(*it, p, {"intensity_threshold", "min_area_px", "max_area_px", "dilation_px"});
    read_field(*it, p, "intensity_threshold", out.blob.intensity_threshold);
    read_field(*it, p, "min_area_px", out.blob.min_area_px);
    read_field(*it, p, "max_area_px", out.blob.max_area_px);
    read_field(*it, p, "dilation_px", out.blob.dilation_px);
  }
  if (auto it = j.find("simulated"); it != j.end()) {
    const std::string p = join(path, "simulated");
    require_object(*it, p);
    check_keys(*it, p, {"max_reliable_range", "full_miss_range_factor", "bbox_jitter_px"});
    read_field(*it, p, "max_reliable_range", out.simulated.max_reliable_range);
    read_field(*it, p, "full_miss_range_factor", out.simulated.full_miss_range_factor);
    read_field(*it, p, "bbox_jitter_px", out.simulated.bbox_jitter_px);
  }
}

void parse_cluster(const json& j, const std::string& path, ClusterParams& out) {
  require_object(j, path);
  check_keys(j, path, {"eps", "min_pts", "ground", "assoc"});
  read_field(j, path, "eps", out.eps);
  read_field(j, path, "min_pts", out.min_pts);
  if (auto it = j.find("ground"); it != j.end()) {
    const std::string p = join(path, "ground");
    require_object(*it, p);
    check_keys(*it, p, {"method", "z_cut", "ransac_iters", "inlier_tol", "max_tilt"});
    const std::string method = read_enum(*it, p, "method",
                                         out.ground.method == GroundMethod::kZThreshold
                                             ? "z_threshold"
                                             : "plane_ransac");
    if (method == "z_threshold")
      out.ground.method = GroundMethod::kZThreshold;
    else if (method == "plane_ransac")
      out.ground.method = GroundMethod::kPlaneRansac;
    else
      fail(join(p, "method"), "expected \"z_threshold\" or \"plane_ransac\"");
    read_field(*it, p, "z_cut", out.ground.z_cut);
    read_field(*it, p, "ransac_iters", out.ground.ransac_iters);
    read_field(*it, p, "inlier_tol", out.ground.inlier_tol);
    read_field(*it, p, "max_tilt", out.ground.max_tilt);
  }
  if (auto it = j.find("assoc"); it != j.end()) {
    const std::string p = join(path, "assoc");
    require_object(*it, p);
    check_keys(*it, p, {"max_count_ratio_dev", "max_range_dev"});
    read_field(*it, p, "max_count_ratio_dev", out.assoc.max_count_ratio_dev);
    read_field(*it, p, "max_range_dev", out.assoc.max_range_dev);
  }
}

void parse_kf(const json& j, const std::string& path, KfParams& out) {
  require_object(j, path);
  check_keys(j, path, {"q_accel", "r_pos", "roi_base_margin_px", "roi_growth_per_miss",
                       "roi_max_fraction_cols", "roi_max_fraction_rows", "init_pos_sigma",
                       "init_vel_sigma"});
  read_field(j, path, "q_accel", out.q_accel);
  read_field(j, path, "r_pos", out.r_pos);
  read_field(j, path, "roi_base_margin_px", out.roi_base_margin_px);
  read_field(j, path, "roi_growth_per_miss", out.roi_growth_per_miss);
  read_field(j, path, "roi_max_fraction_cols", out.roi_max_fraction_cols);
  read_field(j, path, "roi_max_fraction_rows", out.roi_max_fraction_rows);
  read_field(j, path, "init_pos_sigma", out.init_pos_sigma);
  read_field(j, path, "init_vel_sigma", out.init_vel_sigma);
}

}  // namespace

const char* mode_name(TrackerMode mode) {
  switch (mode) {
    case TrackerMode::kFused:
      return "fused";
    case TrackerMode::kImageOnly:
      return "image_only";
    case TrackerMode::kPcdOnly:
      return "pcd_only";
  }
  return "unknown";
}

TrackerMode mode_from_name(const std::string& name) {
  if (name == "fused") return TrackerMode::kFused;
  if (name == "image_only") return TrackerMode::kImageOnly;
  if (name == "pcd_only") return TrackerMode::kPcdOnly;
  throw std::invalid_argument("unknown tracker mode \"" + name +
                              "\" (expected fused, image_only, or pcd_only)");
}

void Scenario::validate() const {
  sensor.validate();
  scene.validate();
  trajectory.validate();
  detector.validate();
  tracker.validate();
  if (modes.empty()) throw std::invalid_argument("modes: need at least one tracker mode");
  for (std::size_t i = 0; i < modes.size(); ++i)
    for (std::size_t k = i + 1; k < modes.size(); ++k)
      if (modes[i] == modes[k])
        throw std::invalid_argument(std::string("modes: duplicate entry \"") +
                                    mode_name(modes[i]) + "\"");
}

Scenario parse_scenario_text(const std::string& json_text, const std::string& id) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("scenario: ") + e.what());
  }
  require_object(doc, "scenario");
  check_keys(doc, "", {"sensor", "scene", "trajectory", "detector", "cluster", "kf", "modes",
                       "seed"});

  Scenario s;
  s.id = id;
  if (auto it = doc.find("sensor"); it != doc.end()) parse_sensor(*it, "sensor", s.sensor);
  if (auto it = doc.find("scene"); it != doc.end()) parse_scene(*it, "scene", s.scene);
  if (auto it = doc.find("trajectory"); it != doc.end())
    parse_trajectory(*it, "trajectory", s.trajectory);
  if (auto it = doc.find("detector"); it != doc.end()) parse_detector(*it, "detector", s.detector);
  if (auto it = doc.find("cluster"); it != doc.end())
    parse_cluster(*it, "cluster", s.tracker.cluster);
  if (auto it = doc.find("kf"); it != doc.end()) parse_kf(*it, "kf", s.tracker.kf);
  if (auto it = doc.find("modes"); it != doc.end()) {
    if (!it->is_array()) fail("modes", "expected an array of mode names");
    s.modes.clear();
    for (const json& m : *it) {
      if (!m.is_string()) fail("modes", "expected an array of mode names");
      s.modes.push_back(mode_from_name(m.get<std::string>()));
    }
  }
  read_field(doc, "", "seed", s.seed);

  // one seed rules the whole run
  s.scene.rng_seed = s.seed;
  s.detector.rng_seed = s.seed;

  s.validate();
  return s;
}

namespace {

// Navigates to the dotted path, creating objects along the way, and plants
// the value. A leaf that is not valid JSON is taken as a bare string, so
// mode=fused works without shell-quoted quotes.
void apply_override(json& doc, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0)
    throw std::invalid_argument("override \"" + spec + "\": expected dotted.path=value");
  const std::string path = spec.substr(0, eq);
  const std::string text = spec.substr(eq + 1);

  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }

  json* node = &doc;
  std::size_t begin = 0;
  while (true) {
    const std::size_t dot = path.find('.', begin);
    const std::string key = path.substr(begin, dot - begin);
    if (key.empty())
      throw std::invalid_argument("override \"" + spec + "\": empty path segment");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    json& next = (*node)[key];
    if (!next.is_object() && !next.is_null())
      throw std::invalid_argument("override \"" + spec + "\": " + key + " is not an object");
    node = &next;
    begin = dot + 1;
  }
}

}  // namespace

Scenario load_scenario(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read scenario file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();

  std::string text = buf.str();
  if (!overrides.empty()) {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw std::invalid_argument(std::string("scenario: ") + e.what());
    }
    for (const std::string& o : overrides) apply_override(doc, o);
    text = doc.dump();
  }
  return parse_scenario_text(text, std::filesystem::path(path).stem().string());
}

}  // namespace panotrack

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "panotrack/detect.hpp"
#include "panotrack/geometry.hpp"
#include "panotrack/sim.hpp"
#include "panotrack/tracker.hpp"

namespace panotrack {

// Everything one run needs, bundled in a single JSON file. The schema is
// strict: a key the parser does not consume is an error naming the full
// dotted path, so typos surface instead of silently keeping a default.
// The top-level seed drives both the renderer and the detector; per-module
// rng_seed fields are not part of the schema.
struct Scenario {
  std::string id = "scenario";
  SensorIntrinsics sensor;
  SceneSpec scene;
  TrajectorySpec trajectory;
  DetectorConfig detector;
  TrackerParams tracker;
  std::vector<TrackerMode> modes = {TrackerMode::kFused, TrackerMode::kPcdOnly,
                                    TrackerMode::kImageOnly};
  std::uint64_t seed = 1;

  // Delegates to every sub-config and checks the mode list. Throws
  // std::invalid_argument.
  void validate() const;
};

const char* mode_name(TrackerMode mode);
TrackerMode mode_from_name(const std::string& name);

// Parses a scenario document. All keys are optional; absent ones keep the
// compiled defaults. Unknown keys, type mismatches, and out-of-domain values
// throw std::invalid_argument with a dotted-path diagnostic.
Scenario parse_scenario_text(const std::string& json_text, const std::string& id);

// Reads the file, applies "dotted.path=value" overrides to the raw document,
// then parses strictly; an override that introduces an unknown key fails the
// same way a bad file does. The id is the filename stem.
Scenario load_scenario(const std::string& path, const std::vector<std::string>& overrides = {});

}  // namespace panotrack

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cyclops/constraints.hpp"
#include "cyclops/reports.hpp"
#include "cyclops/solver.hpp"
#include "cyclops/synthetic.hpp"

namespace cyclops {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Rounds to 9 significant digits so serialized floats are reproducible.
double round9(double v);

/// A rounded number, or null for non-finite values.
Json json_number(double v);

Json to_json(const CameraRig& rig);
Json to_json(const OcclusionRun& run);
Json to_json(const Discontinuity& disc);
Json to_json(const OcclusionReport& report);
Json to_json(const ConstraintViolations& v);
Json to_json(const Metrics& m);
Json to_json(const BiasStats& s);
Json to_json(const BiasReport& r);
Json to_json(const SceneSpec& spec);
Json to_json(const SolverParams& p);

/// Missing keys keep their defaults; unknown keys are ignored.
SceneSpec scene_spec_from_json(const Json& j);

/// Header shared by every report: schema version and command name.
Json report_header(const std::string& command);

/// Pretty-printed, newline-terminated, written atomically.
void write_json_file(const std::filesystem::path& path, const Json& j);
Json read_json_file(const std::filesystem::path& path);

/// Structural check of a command report: required keys and their types.
/// Returns one message per problem; empty means valid.
std::vector<std::string> schema_errors(const Json& report);

}  // namespace cyclops

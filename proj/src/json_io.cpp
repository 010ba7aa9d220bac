#include "cyclops/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "cyclops/error.hpp"
#include "cyclops/middlebury_io.hpp"

namespace cyclops {

double round9(double v) {
  if (!std::isfinite(v)) return v;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::strtod(buf, nullptr);
}

Json json_number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return round9(v);
}

Json to_json(const CameraRig& rig) {
  return Json{{"focal_px", json_number(rig.focal_px)}, {"baseline", json_number(rig.baseline)},
              {"doffs", json_number(rig.doffs)},       {"cx", json_number(rig.cx)},
              {"cy", json_number(rig.cy)},             {"width", rig.width},
              {"height", rig.height},                  {"ndisp", rig.ndisp}};
}

Json to_json(const OcclusionRun& run) {
  return Json{{"e", run.e}, {"side", to_string(run.side)}, {"start", run.start}, {"end", run.end},
              {"width", run.width()}};
}

Json to_json(const Discontinuity& disc) {
  return Json{{"e", disc.e},
              {"side", to_string(disc.side)},
              {"position", disc.position},
              {"d_before", json_number(disc.d_before)},
              {"d_after", json_number(disc.d_after)},
              {"jump", json_number(disc.jump())}};
}

Json to_json(const OcclusionReport& report) {
  Json runs = Json::array();
  Json frame = Json::array();
  Json discs = Json::array();
  for (const auto& line : report.lines) {
    for (const auto& r : line.runs) runs.push_back(to_json(r));
    for (const auto& r : line.frame_runs) frame.push_back(to_json(r));
    for (const auto& d : line.discontinuities) discs.push_back(to_json(d));
  }
  return Json{{"width", report.width},
              {"lines", report.lines.size()},
              {"lr_tolerance", json_number(report.params.lr_tolerance)},
              {"jump_threshold", json_number(report.params.jump_threshold)},
              {"runs", std::move(runs)},
              {"frame_runs", std::move(frame)},
              {"discontinuities", std::move(discs)}};
}

Json to_json(const ConstraintViolations& v) {
  Json opaque = Json::array();
  for (const auto& o : v.opaque_violations) {
    Json ds = Json::array();
    for (double d : o.disparities) ds.push_back(json_number(d));
    opaque.push_back(Json{{"e", o.e}, {"x", json_number(o.x)}, {"disparities", std::move(ds)}});
  }
  Json davinci = Json::array();
  for (const auto& m : v.davinci_mismatches) {
    davinci.push_back(Json{{"e", m.e},
                           {"discontinuity", m.discontinuity ? to_json(*m.discontinuity) : Json(nullptr)},
                           {"run", m.run ? to_json(*m.run) : Json(nullptr)},
                           {"jump", json_number(m.jump)},
                           {"width", m.width},
                           {"residual", json_number(m.residual)}});
  }
  return Json{{"opaque_violations", v.opaque_violations.size()},
              {"davinci_mismatches", v.davinci_mismatches.size()},
              {"opaque", std::move(opaque)},
              {"davinci", std::move(davinci)}};
}

Json to_json(const Metrics& m) {
  Json bad = Json::object();
  for (std::size_t i = 0; i < m.thresholds.size(); ++i) {
    char key[32];
    std::snprintf(key, sizeof key, "bad_%g", m.thresholds[i]);
    bad[key] = json_number(m.bad[i]);
  }
  return Json{{"bad", std::move(bad)},
              {"mean_abs_error", json_number(m.mean_abs_error)},
              {"rms_error", json_number(m.rms_error)},
              {"coverage", json_number(m.coverage)},
              {"gt_pixels", m.gt_pixels},
              {"evaluated", m.evaluated},
              {"total_pixels", m.total_pixels}};
}

Json to_json(const BiasStats& s) {
  Json counts = Json::array();
  for (auto c : s.histogram.counts) counts.push_back(c);
  return Json{{"count", s.count},
              {"min", json_number(s.min)},
              {"max", json_number(s.max)},
              {"mean", json_number(s.mean)},
              {"argmin", Json{{"x", s.argmin.x}, {"y", s.argmin.y}}},
              {"argmax", Json{{"x", s.argmax.x}, {"y", s.argmax.y}}},
              {"histogram", Json{{"lo", json_number(s.histogram.lo)},
                                 {"hi", json_number(s.histogram.hi)},
                                 {"counts", std::move(counts)}}}};
}

Json to_json(const BiasReport& r) {
  return Json{{"left", to_json(r.left)},
              {"right", to_json(r.right)},
              {"skipped", r.skipped},
              {"max_residual_left", json_number(r.max_residual_left)},
              {"max_residual_right", json_number(r.max_residual_right)}};
}

Json to_json(const SceneSpec& spec) {
  return Json{{"kind", to_string(spec.kind)},
              {"width", spec.width},
              {"height", spec.height},
              {"background_d", spec.background_d},
              {"foreground_d", spec.foreground_d},
              {"edge", spec.edge},
              {"pole_position", spec.pole_position},
              {"pole_width", spec.pole_width},
              {"period", spec.period},
              {"band_start", spec.band_start},
              {"band_end", spec.band_end},
              {"seed", spec.seed},
              {"ndisp", spec.ndisp},
              {"focal_px", json_number(spec.focal_px)},
              {"baseline", json_number(spec.baseline)}};
}

Json to_json(const SolverParams& p) {
  return Json{{"occlusion_penalty", json_number(p.occlusion_penalty)},
              {"continuity_band", p.continuity_band},
              {"tie_break", to_string(p.tie_break)},
              {"homogeneity_threshold", json_number(p.homogeneity_threshold)}};
}

SceneSpec scene_spec_from_json(const Json& j) {
  SceneSpec s;
  try {
    if (j.contains("kind")) s.kind = scene_kind_from_string(j.at("kind").get<std::string>());
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
    };
    get("width", s.width);
    get("height", s.height);
    get("background_d", s.background_d);
    get("foreground_d", s.foreground_d);
    get("edge", s.edge);
    get("pole_position", s.pole_position);
    get("pole_width", s.pole_width);
    get("period", s.period);
    get("band_start", s.band_start);
    get("band_end", s.band_end);
    get("seed", s.seed);
    get("ndisp", s.ndisp);
    get("focal_px", s.focal_px);
    get("baseline", s.baseline);
  } catch (const Json::exception& ex) {
    throw Error(ErrorCode::Parse, std::string("scene spec: ") + ex.what());
  }
  return s;
}

Json report_header(const std::string& command) {
  return Json{{"schema_version", kSchemaVersion}, {"command", command}};
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

Json read_json_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return Json::parse(bytes.begin(), bytes.end());
  } catch (const Json::exception& ex) {
    throw Error(ErrorCode::Parse, path.string() + ": " + ex.what());
  }
}

namespace {

enum class Type { Number, Integer, String, Array, Object, Boolean };

bool has_type(const Json& v, Type t) {
  switch (t) {
    case Type::Number: return v.is_number() || v.is_null();
    case Type::Integer: return v.is_number_integer();
    case Type::String: return v.is_string();
    case Type::Array: return v.is_array();
    case Type::Object: return v.is_object();
    case Type::Boolean: return v.is_boolean();
  }
  return false;
}

struct Field {
  const char* path;  // dot-separated
  Type type;
};

const Json* lookup(const Json& root, const std::string& path) {
  const Json* cur = &root;
  std::size_t start = 0;
  while (start <= path.size()) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!cur->is_object() || !cur->contains(key)) return nullptr;
    cur = &(*cur)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return cur;
}

}  // namespace

std::vector<std::string> schema_errors(const Json& report) {
  std::vector<std::string> errors;
  auto need = [&](const std::vector<Field>& fields) {
    for (const auto& f : fields) {
      const Json* v = lookup(report, f.path);
      if (!v) {
        errors.push_back(std::string("missing ") + f.path);
      } else if (!has_type(*v, f.type)) {
        errors.push_back(std::string("wrong type for ") + f.path);
      }
    }
  };
  need({{"schema_version", Type::Integer}, {"command", Type::String}});
  if (!errors.empty()) return errors;
  if (report["schema_version"].get<int>() != kSchemaVersion) errors.push_back("unsupported schema_version");
  const auto command = report["command"].get<std::string>();
  if (command == "slice") {
    need({{"scene", Type::String}, {"lines", Type::Array}, {"warnings", Type::Array}});
    if (errors.empty()) {
      for (const auto& line : report["lines"]) {
        for (const char* key : {"e", "d_min", "d_max", "valid_cells"}) {
          if (!line.contains(key) || !line[key].is_number_integer()) errors.push_back(std::string("slice line lacks ") + key);
        }
        for (const char* key : {"lr_image", "xd_image"}) {
          if (!line.contains(key) || !line[key].is_string()) errors.push_back(std::string("slice line lacks ") + key);
        }
      }
    }
  } else if (command == "validate") {
    need({{"scene", Type::String},
          {"passed", Type::Boolean},
          {"occlusions", Type::Object},
          {"violations", Type::Object},
          {"violations.opaque_violations", Type::Integer},
          {"violations.davinci_mismatches", Type::Integer},
          {"budgets", Type::Object},
          {"warnings", Type::Array}});
  } else if (command == "bias") {
    need({{"scene", Type::String},
          {"rig", Type::Object},
          {"bias", Type::Object},
          {"bias.left.count", Type::Integer},
          {"bias.left.mean", Type::Number},
          {"bias.right.mean", Type::Number},
          {"bias.max_residual_left", Type::Number},
          {"bias.max_residual_right", Type::Number}});
  } else if (command == "solve") {
    need({{"scene", Type::String}, {"params", Type::Object}, {"unknown_lines", Type::Array}, {"labels", Type::Object}});
  } else if (command == "eval") {
    need({{"metrics", Type::Object}, {"metrics.coverage", Type::Number}});
  } else if (command == "gen") {
    need({{"spec", Type::Object}, {"annotations", Type::Object}});
  } else {
    errors.push_back("unknown command " + command);
  }
  return errors;
}

}  // namespace cyclops

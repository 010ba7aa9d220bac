#include "cyclops/commands.hpp"

#include <algorithm>
#include <exception>
#include <ostream>
#include <string>

#include "cyclops/error.hpp"
#include "cyclops/image_io.hpp"
#include "cyclops/json_io.hpp"
#include "cyclops/middlebury_io.hpp"
#include "cyclops/reports.hpp"

namespace fs = std::filesystem;

namespace cyclops {

std::vector<int> select_lines(const std::vector<int>& requested, int height) {
  std::vector<int> out;
  if (requested.empty()) {
    for (int e : kDefaultSliceLines) {
      const int c = std::clamp(e, 0, height - 1);
      if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
    }
    return out;
  }
  for (int e : requested) {
    if (e < 0 || e >= height) {
      throw Error(ErrorCode::OutOfBounds,
                  "line " + std::to_string(e) + " outside [0, " + std::to_string(height) + ")");
    }
    if (std::find(out.begin(), out.end(), e) == out.end()) out.push_back(e);
  }
  return out;
}

namespace {

template <typename Body>
int guarded(const char* name, std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const Error& ex) {
    err << "cyclops " << name << ": " << to_string(ex.code()) << ": " << ex.what() << "\n";
  } catch (const std::exception& ex) {
    err << "cyclops " << name << ": " << ex.what() << "\n";
  }
  return kExitUsage;
}

ScenePair load(const RunConfig& c) {
  if (c.scene.empty()) throw Error(ErrorCode::InvalidArgument, "no scene directory given");
  return downsample_scene(load_scene(c.scene), c.downsample);
}

struct Range {
  int lo;
  int hi;
};

Range disparity_range(const RunConfig& c, const CameraRig& rig) {
  const Range r{c.d_min.value_or(0), c.d_max.value_or(rig.ndisp)};
  if (r.lo > r.hi) throw Error(ErrorCode::InvalidArgument, "d_min exceeds d_max");
  return r;
}

struct Features {
  FeatureMap left;
  FeatureMap right;
};

Features features(const RunConfig& c, const ScenePair& scene) {
  return {compute_features(scene.left_image, c.descriptor, c.window),
          compute_features(scene.right_image, c.descriptor, c.window)};
}

std::vector<double> row_copy(const DisparityMap& m, int e) {
  const auto row = m.values.row(e);
  return {row.begin(), row.end()};
}

double fraction(const std::vector<bool>& mask) {
  if (mask.empty()) return 0.0;
  return double(std::count(mask.begin(), mask.end(), true)) / double(mask.size());
}

// Long lists are cut so reports on large scenes stay readable.
constexpr std::size_t kMaxListed = 200;

Json capped(const Json& arr) {
  if (!arr.is_array() || arr.size() <= kMaxListed) return arr;
  Json out = Json::array();
  for (std::size_t i = 0; i < kMaxListed; ++i) out.push_back(arr[i]);
  return out;
}

Json occlusion_summary(const OcclusionReport& report) {
  Json full = to_json(report);
  Json s{{"runs", report.run_count()},
         {"discontinuities", report.discontinuity_count()},
         {"frame_runs", full["frame_runs"].size()},
         {"lr_tolerance", full["lr_tolerance"]},
         {"jump_threshold", full["jump_threshold"]},
         {"listed_runs", capped(full["runs"])},
         {"listed_discontinuities", capped(full["discontinuities"])}};
  return s;
}

Json violations_summary(const ConstraintViolations& v) {
  Json full = to_json(v);
  full["opaque"] = capped(full["opaque"]);
  full["davinci"] = capped(full["davinci"]);
  return full;
}

}  // namespace

int cmd_slice(const RunConfig& c, std::ostream& out, std::ostream& err) {
  return guarded("slice", err, [&] {
    const ScenePair scene = load(c);
    const auto lines = select_lines(c.lines, scene.height());
    const Range range = disparity_range(c, scene.rig);
    const Features f = features(c, scene);
    fs::create_directories(c.output);

    std::optional<OcclusionReport> occ;
    if (scene.gt_left && scene.gt_right) occ = detect_half_occlusions(*scene.gt_left, *scene.gt_right, c.occlusion);

    Json report = report_header("slice");
    report["scene"] = scene.name;
    Json warnings = Json::array();
    if (!scene.gt_left && !scene.gt_right) warnings.push_back("no ground truth: heatmaps drawn without overlay");
    Json entries = Json::array();
    for (int e : lines) {
      Json entry{{"e", e}, {"d_min", range.lo}, {"d_max", range.hi}};
      CostSlice slice(e, scene.width(), range.lo, range.hi);
      try {
        slice = build_cost_slice(f.left, f.right, e, range.lo, range.hi);
      } catch (const Error& ex) {
        if (ex.code() != ErrorCode::DegenerateSlice) throw;
        warnings.push_back("line " + std::to_string(e) + ": " + ex.what());
      }
      SliceOverlay overlay;
      if (scene.gt_left) overlay.gt_left = row_copy(*scene.gt_left, e);
      if (scene.gt_right) overlay.gt_right = row_copy(*scene.gt_right, e);
      if (occ) {
        const auto& line = occ->lines[static_cast<std::size_t>(e)];
        overlay.runs = line.runs;
        overlay.discontinuities = line.discontinuities;
        entry["runs"] = line.runs.size();
        entry["discontinuities"] = line.discontinuities.size();
      }
      const std::string lr_name = "slice_lr_e" + std::to_string(e) + ".png";
      const std::string xd_name = "slice_xd_e" + std::to_string(e) + ".png";
      write_rgb_png(c.output / lr_name, render_lr_slice(slice, overlay));
      write_rgb_png(c.output / xd_name, render_xd_slice(slice));
      entry["lr_image"] = lr_name;
      entry["xd_image"] = xd_name;
      entry["valid_cells"] = slice.valid_count();
      entry["flat"] = slice.flat();
      entry["gt_overlay"] = overlay.gt_left.has_value() || overlay.gt_right.has_value();
      if (slice.valid_count() > 0) {
        entry["homogeneous_fraction"] = json_number(fraction(homogeneity_mask(slice, c.spread_threshold)));
        const auto modes = multimodality_map(slice, c.mode_threshold, c.mode_separation);
        const auto multi = std::count_if(modes.counts.begin(), modes.counts.end(), [](int n) { return n >= 2; });
        entry["multimodal_fraction"] = json_number(double(multi) / double(modes.counts.size()));
      }
      entries.push_back(std::move(entry));
      out << "slice e=" << e << " -> " << (c.output / lr_name).string() << "\n";
    }
    report["lines"] = std::move(entries);
    report["warnings"] = std::move(warnings);
    write_json_file(c.output / "slice.json", report);
    return kExitOk;
  });
}

int cmd_validate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  return guarded("validate", err, [&] {
    const ScenePair scene = load(c);
    if (!scene.gt_left && !scene.gt_right) throw Error(ErrorCode::MissingKey, "scene has no ground truth");
    fs::create_directories(c.output);
    Json report = report_header("validate");
    report["scene"] = scene.name;
    Json warnings = Json::array();

    const auto surfaces = gt_to_cyclopean(scene.gt_left ? &*scene.gt_left : nullptr,
                                          scene.gt_right ? &*scene.gt_right : nullptr, c.layer_tolerance);
    ConstraintViolations v = check_opaque_gc(surfaces, c.layer_tolerance);
    Json occlusions = Json::object();
    if (scene.gt_left && scene.gt_right) {
      const auto occ = detect_half_occlusions(*scene.gt_left, *scene.gt_right, c.occlusion);
      v.davinci_mismatches = check_da_vinci_gc(occ, c.pixel_tolerance).davinci_mismatches;
      occlusions = occlusion_summary(occ);
    } else {
      warnings.push_back("only one GT view: Da Vinci check skipped");
    }
    const bool passed = v.opaque_violations.size() <= c.max_opaque && v.davinci_mismatches.size() <= c.max_davinci;
    report["passed"] = passed;
    report["occlusions"] = std::move(occlusions);
    report["violations"] = violations_summary(v);
    report["budgets"] = Json{{"opaque", c.max_opaque}, {"davinci", c.max_davinci}};
    report["warnings"] = std::move(warnings);
    write_json_file(c.output / "validate.json", report);
    out << "opaque violations: " << v.opaque_violations.size()
        << ", davinci mismatches: " << v.davinci_mismatches.size() << "\n";
    return passed ? kExitOk : kExitViolations;
  });
}

int cmd_solve(const RunConfig& c, std::ostream& out, std::ostream& err) {
  return guarded("solve", err, [&] {
    c.solver.validate();
    const ScenePair scene = load(c);
    const Range range = disparity_range(c, scene.rig);
    const Features f = features(c, scene);
    fs::create_directories(c.output);

    std::vector<int> lines(static_cast<std::size_t>(scene.height()));
    for (int e = 0; e < scene.height(); ++e) lines[static_cast<std::size_t>(e)] = e;
    const auto slices = build_cost_slices(f.left, f.right, lines, range.lo, range.hi);
    const SolvedImage solved = solve_image(slices, scene.width(), c.solver);

    write_pfm_file(c.output / "disparity_cyclopean.pfm", solved.disparity);
    write_gray_png(c.output / "labels.png", render_labels(solved.labels));

    Json report = report_header("solve");
    report["scene"] = scene.name;
    report["params"] = to_json(c.solver);
    report["d_min"] = range.lo;
    report["d_max"] = range.hi;
    report["unknown_lines"] = solved.unknown_lines;
    Json labels = Json::object();
    for (auto l : {CellLabel::Unknown, CellLabel::Match, CellLabel::LOcc, CellLabel::ROcc, CellLabel::Filled}) {
      labels[to_string(l)] = std::count(solved.labels.data().begin(), solved.labels.data().end(),
                                        static_cast<std::uint8_t>(l));
    }
    report["labels"] = std::move(labels);
    if (scene.gt_left || scene.gt_right) {
      const auto surfaces = gt_to_cyclopean(scene.gt_left ? &*scene.gt_left : nullptr,
                                            scene.gt_right ? &*scene.gt_right : nullptr, c.layer_tolerance);
      report["metrics"] = to_json(eval_metrics(solved.disparity, surfaces_to_map(surfaces)));
    }
    write_json_file(c.output / "solve.json", report);
    out << "solved " << scene.height() - static_cast<int>(solved.unknown_lines.size()) << "/" << scene.height()
        << " lines\n";
    return kExitOk;
  });
}

int cmd_bias(const RunConfig& c, std::ostream& out, std::ostream& err) {
  return guarded("bias", err, [&] {
    const ScenePair scene = load(c);
    if (!scene.gt_left) throw Error(ErrorCode::MissingKey, "scene has no left-view ground truth");
    fs::create_directories(c.output);
    const BiasReport bias = compute_bias(*scene.gt_left, scene.rig, c.histogram_bins);
    write_pfm_file(c.output / "bias_left.pfm", DisparityMap{View::Left, bias.left_ratio});
    write_pfm_file(c.output / "bias_right.pfm", DisparityMap{View::Left, bias.right_ratio});
    Json report = report_header("bias");
    report["scene"] = scene.name;
    report["rig"] = to_json(scene.rig);
    report["bias"] = to_json(bias);
    write_json_file(c.output / "bias.json", report);
    out << "bias: " << bias.left.count << " pixels, max identity residual "
        << std::max(bias.max_residual_left, bias.max_residual_right) << "\n";
    return kExitOk;
  });
}

int cmd_eval(const RunConfig& c, std::ostream& out, std::ostream& err) {
  return guarded("eval", err, [&] {
    if (c.prediction.empty()) throw Error(ErrorCode::InvalidArgument, "no prediction given");
    DisparityMap pred = read_pfm_file(c.prediction, View::Left);
    DisparityMap gt;
    if (!c.ground_truth.empty()) {
      gt = read_pfm_file(c.ground_truth, View::Left);
    } else {
      const ScenePair scene = load(c);
      if (!scene.gt_left) throw Error(ErrorCode::MissingKey, "scene has no ground truth");
      if (pred.width() == 2 * scene.width()) {
        const auto surfaces = gt_to_cyclopean(&*scene.gt_left, scene.gt_right ? &*scene.gt_right : nullptr,
                                              c.layer_tolerance);
        gt = surfaces_to_map(surfaces);
        pred.view = View::Cyclopean;
      } else {
        gt = *scene.gt_left;
      }
    }
    const Metrics m = eval_metrics(pred, gt);
    fs::create_directories(c.output);
    Json report = report_header("eval");
    report["metrics"] = to_json(m);
    write_json_file(c.output / "eval.json", report);
    out << "coverage " << m.coverage << ", mean abs error " << m.mean_abs_error << "\n";
    return kExitOk;
  });
}

int cmd_gen(const RunConfig& c, std::ostream& out, std::ostream& err) {
  return guarded("gen", err, [&] {
    const GeneratedScene g = generate(c.scene_spec, c.occlusion);
    write_scene(c.output, g.pair);
    Json report = report_header("gen");
    report["spec"] = to_json(c.scene_spec);
    report["annotations"] = to_json(g.annotations);
    write_json_file(c.output / "annotations.json", report);
    out << "wrote " << to_string(c.scene_spec.kind) << " scene to " << c.output.string() << "\n";
    return kExitOk;
  });
}

}  // namespace cyclops

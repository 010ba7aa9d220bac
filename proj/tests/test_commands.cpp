#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cyclops/commands.hpp"
#include "cyclops/error.hpp"
#include "cyclops/json_io.hpp"
#include "cyclops/middlebury_io.hpp"
#include "test_support.hpp"

using namespace cyclops;
using cyclops::testing::TempDir;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

template <typename Cmd>
Run run(Cmd cmd, const RunConfig& c) {
  std::ostringstream out, err;
  Run r;
  r.code = cmd(c, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// Generates the default step scene into dir/scene and points a config at it.
RunConfig step_scene(const TempDir& dir, int height = 8) {
  RunConfig c;
  c.scene_spec.height = height;
  c.output = dir.path() / "scene";
  REQUIRE(run(cmd_gen, c).code == kExitOk);
  c.scene = c.output;
  c.output = dir.path() / "out";
  return c;
}

}  // namespace

TEST_CASE("select_lines clamps defaults and checks requests") {
  CHECK(select_lines({}, 500) == std::vector<int>{128, 30, 464});
  CHECK(select_lines({}, 100) == std::vector<int>{99, 30});
  CHECK(select_lines({}, 20) == std::vector<int>{19});
  CHECK(select_lines({3, 1}, 10) == std::vector<int>{3, 1});
  CHECK_THROWS_AS(select_lines({10}, 10), Error);
  CHECK_THROWS_AS(select_lines({-1}, 10), Error);
}

TEST_CASE("gen writes a loadable scene with annotations") {
  TempDir dir;
  const RunConfig c = step_scene(dir);
  const auto scene = load_scene(c.scene);
  CHECK(scene.width() == 128);
  CHECK(scene.height() == 8);
  REQUIRE(scene.gt_left);
  const Json ann = read_json_file(c.scene / "annotations.json");
  CHECK(schema_errors(ann).empty());
  CHECK(ann["spec"]["kind"] == "step");
  CHECK(ann["annotations"]["runs"].size() == 8);
}

TEST_CASE("validate passes clean ground truth and flags a corrupted one") {
  TempDir dir;
  RunConfig c = step_scene(dir);
  const Run ok = run(cmd_validate, c);
  CHECK(ok.code == kExitOk);
  const Json report = read_json_file(c.output / "validate.json");
  CHECK(schema_errors(report).empty());
  CHECK(report["passed"] == true);
  CHECK(report["occlusions"]["runs"] == 8);

  // Widen the left-view occlusion of every line past the jump it belongs to.
  auto scene = load_scene(c.scene);
  for (int y = 0; y < scene.height(); ++y) {
    for (int l = 28; l < 34; ++l) scene.gt_left->values(l, y) = INFINITY;
  }
  write_scene(c.scene, scene);
  CHECK(run(cmd_validate, c).code == kExitViolations);
  CHECK(read_json_file(c.output / "validate.json")["passed"] == false);
  c.max_opaque = 1000;
  c.max_davinci = 1000;
  CHECK(run(cmd_validate, c).code == kExitOk);
}

TEST_CASE("commands on a missing scene report a usage error") {
  TempDir dir;
  RunConfig c;
  c.scene = dir.path();
  c.output = dir.path() / "out";
  for (auto cmd : {cmd_slice, cmd_validate, cmd_solve, cmd_bias}) {
    const Run r = run(cmd, c);
    CHECK(r.code == kExitUsage);
    CHECK_FALSE(r.err.empty());
  }
}

TEST_CASE("slice renders the clamped default lines") {
  TempDir dir;
  const RunConfig c = step_scene(dir, 40);
  CHECK(run(cmd_slice, c).code == kExitOk);
  const Json report = read_json_file(c.output / "slice.json");
  CHECK(schema_errors(report).empty());
  REQUIRE(report["lines"].size() == 2);
  CHECK(report["lines"][0]["e"] == 39);
  CHECK(report["lines"][1]["e"] == 30);
  CHECK(report["lines"][0]["runs"] == 1);
  for (const auto& line : report["lines"]) {
    CHECK(std::filesystem::exists(c.output / line["lr_image"].get<std::string>()));
    CHECK(std::filesystem::exists(c.output / line["xd_image"].get<std::string>()));
  }
}

TEST_CASE("solve writes a cyclopean map that eval can score") {
  TempDir dir;
  RunConfig c = step_scene(dir);
  CHECK(run(cmd_solve, c).code == kExitOk);
  const Json report = read_json_file(c.output / "solve.json");
  CHECK(schema_errors(report).empty());
  CHECK(report["unknown_lines"].empty());
  const auto map = read_pfm_file(c.output / "disparity_cyclopean.pfm", View::Cyclopean);
  CHECK(map.width() == 256);
  CHECK(map.height() == 8);
  // Cyclopean GT fills one half-grid cell per match, so about half the cells
  // are unknown in it; the solution should predict every one that is known.
  CHECK(report["metrics"]["evaluated"] == report["metrics"]["gt_pixels"]);
  CHECK(report["metrics"]["bad"]["bad_1"].get<double>() < 0.01);

  c.prediction = c.output / "disparity_cyclopean.pfm";
  c.output = dir.path() / "eval";
  CHECK(run(cmd_eval, c).code == kExitOk);
  const Json eval = read_json_file(c.output / "eval.json");
  CHECK(schema_errors(eval).empty());
  CHECK(eval["metrics"]["coverage"] == report["metrics"]["coverage"]);
}

TEST_CASE("solve rejects bad solver parameters") {
  TempDir dir;
  RunConfig c = step_scene(dir);
  c.solver.occlusion_penalty = -1;
  CHECK(run(cmd_solve, c).code == kExitUsage);
}

TEST_CASE("bias report on the synthetic rig") {
  TempDir dir;
  const RunConfig c = step_scene(dir);
  const Run r = run(cmd_bias, c);
  CHECK(r.code == kExitOk);
  const Json report = read_json_file(c.output / "bias.json");
  CHECK(schema_errors(report).empty());
  CHECK(report["bias"]["max_residual_left"].get<double>() <= 1e-9);
  CHECK(report["bias"]["max_residual_right"].get<double>() <= 1e-9);
  CHECK(std::filesystem::exists(c.output / "bias_left.pfm"));
}

TEST_CASE("eval without a prediction is a usage error") {
  TempDir dir;
  const RunConfig c = step_scene(dir);
  CHECK(run(cmd_eval, c).code == kExitUsage);
}

TEST_CASE("schema check catches missing and mistyped keys") {
  Json j = report_header("bias");
  CHECK_FALSE(schema_errors(j).empty());
  CHECK_FALSE(schema_errors(Json::object()).empty());
  Json bad = report_header("validate");
  bad["schema_version"] = 99;
  CHECK_FALSE(schema_errors(bad).empty());
}

TEST_CASE("scene specs round trip through JSON") {
  SceneSpec s;
  s.kind = SceneKind::ThinPole;
  s.pole_width = 5;
  s.seed = 77;
  s.focal_px = 321.5;
  const SceneSpec back = scene_spec_from_json(to_json(s));
  CHECK(to_json(back) == to_json(s));
  CHECK(scene_spec_from_json(Json::object()).width == SceneSpec{}.width);
}

TEST_CASE("serialized numbers are rounded and non-finite ones are null") {
  CHECK(round9(1.0 / 3.0) == 0.333333333);
  CHECK(round9(0.0) == 0.0);
  CHECK(json_number(std::nan("")).is_null());
  CHECK(json_number(INFINITY).is_null());
  CHECK(json_number(2.5) == 2.5);
}

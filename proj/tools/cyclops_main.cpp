#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cyclops/commands.hpp"

namespace {

using cyclops::RunConfig;

void add_scene_options(CLI::App* cmd, RunConfig& c) {
  cmd->add_option("--scene", c.scene, "Scene directory (im0, im1, calib.txt, optional disp0/disp1.pfm)");
  cmd->add_option("--out", c.output, "Output directory")->capture_default_str();
  cmd->add_option("--downsample", c.downsample, "Integer reduction factor")->check(CLI::PositiveNumber);
}

void add_matching_options(CLI::App* cmd, RunConfig& c, std::string& descriptor) {
  cmd->add_option("--descriptor", descriptor, "census or zero_mean_patch")->capture_default_str();
  cmd->add_option("--window", c.window, "Odd descriptor window size")->capture_default_str();
  cmd->add_option("--d-min", c.d_min, "Smallest disparity (default 0)");
  cmd->add_option("--d-max", c.d_max, "Largest disparity (default ndisp)");
}

void add_occlusion_options(CLI::App* cmd, RunConfig& c) {
  cmd->add_option("--lr-tolerance", c.occlusion.lr_tolerance, "Left-right consistency tolerance")
      ->capture_default_str();
  cmd->add_option("--jump-threshold", c.occlusion.jump_threshold, "Jumps with |delta d| above this are discontinuities")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cyclopean stereo geometry: slices, constraint validation, scanline solving"};
  app.set_config("--config", "", "TOML/INI file with option defaults; flags override");
  app.require_subcommand(1);

  RunConfig c;
  std::string descriptor = "census";
  std::string tie_break = "far";
  std::string kind = "step";

  auto* slice = app.add_subcommand("slice", "Render LR and XD epipolar slices");
  add_scene_options(slice, c);
  add_matching_options(slice, c, descriptor);
  add_occlusion_options(slice, c);
  slice->add_option("--lines,-e", c.lines, "Epipolar lines (default 128 30 464, clamped)");
  slice->add_option("--spread-threshold", c.spread_threshold, "Homogeneity spread threshold")->capture_default_str();

  auto* validate = app.add_subcommand("validate", "Check GT against Opaque and Da Vinci constraints");
  add_scene_options(validate, c);
  add_occlusion_options(validate, c);
  validate->add_option("--pixel-tolerance", c.pixel_tolerance, "Jump/width agreement")->capture_default_str();
  validate->add_option("--layer-tolerance", c.layer_tolerance, "Cyclopean merge tolerance")->capture_default_str();
  validate->add_option("--max-opaque", c.max_opaque, "Allowed opaque violations")->capture_default_str();
  validate->add_option("--max-davinci", c.max_davinci, "Allowed Da Vinci mismatches")->capture_default_str();

  auto* solve = app.add_subcommand("solve", "Scanline solve every line");
  add_scene_options(solve, c);
  add_matching_options(solve, c, descriptor);
  solve->add_option("--kappa", c.solver.occlusion_penalty, "Cost per occluded half-grid cell")->capture_default_str();
  solve->add_option("--band", c.solver.continuity_band, "Largest |delta d| treated as continuous")
      ->capture_default_str();
  solve->add_option("--tie-break", tie_break, "far or near")->capture_default_str();
  solve->add_option("--homogeneity", c.solver.homogeneity_threshold, "Leave homogeneous lines unknown below this spread")
      ->capture_default_str();

  auto* bias = app.add_subcommand("bias", "Eye-distance versus cyclopean depth report");
  add_scene_options(bias, c);
  bias->add_option("--bins", c.histogram_bins, "Histogram bins")->capture_default_str();

  auto* eval = app.add_subcommand("eval", "Bad-pixel and error metrics");
  add_scene_options(eval, c);
  eval->add_option("--pred", c.prediction, "Predicted disparity PFM")->required();
  eval->add_option("--gt", c.ground_truth, "GT PFM (default: the scene's GT)");

  auto* gen = app.add_subcommand("gen", "Write a synthetic scene");
  gen->add_option("--out", c.output, "Scene directory to create")->required();
  gen->add_option("--kind", kind, "step, thin_pole, repetitive or homogeneous_band")->capture_default_str();
  gen->add_option("--width", c.scene_spec.width)->capture_default_str();
  gen->add_option("--height", c.scene_spec.height)->capture_default_str();
  gen->add_option("--bg", c.scene_spec.background_d, "Background disparity")->capture_default_str();
  gen->add_option("--fg", c.scene_spec.foreground_d, "Foreground disparity")->capture_default_str();
  gen->add_option("--edge", c.scene_spec.edge)->capture_default_str();
  gen->add_option("--pole-position", c.scene_spec.pole_position)->capture_default_str();
  gen->add_option("--pole-width", c.scene_spec.pole_width)->capture_default_str();
  gen->add_option("--period", c.scene_spec.period)->capture_default_str();
  gen->add_option("--band-start", c.scene_spec.band_start)->capture_default_str();
  gen->add_option("--band-end", c.scene_spec.band_end)->capture_default_str();
  gen->add_option("--seed", c.scene_spec.seed)->capture_default_str();
  gen->add_option("--ndisp", c.scene_spec.ndisp)->capture_default_str();
  add_occlusion_options(gen, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cyclops::kExitOk : cyclops::kExitUsage;
  }

  try {
    c.descriptor = cyclops::descriptor_kind_from_string(descriptor);
    c.solver.tie_break = cyclops::tie_break_from_string(tie_break);
    c.scene_spec.kind = cyclops::scene_kind_from_string(kind);
  } catch (const std::exception& e) {
    std::cerr << "cyclops: " << e.what() << "\n";
    return cyclops::kExitUsage;
  }

  if (*slice) return cyclops::cmd_slice(c, std::cout, std::cerr);
  if (*validate) return cyclops::cmd_validate(c, std::cout, std::cerr);
  if (*solve) return cyclops::cmd_solve(c, std::cout, std::cerr);
  if (*bias) return cyclops::cmd_bias(c, std::cout, std::cerr);
  if (*eval) return cyclops::cmd_eval(c, std::cout, std::cerr);
  return cyclops::cmd_gen(c, std::cout, std::cerr);
}

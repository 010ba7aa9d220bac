#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "cyclops/constraints.hpp"
#include "cyclops/features.hpp"
#include "cyclops/solver.hpp"
#include "cyclops/synthetic.hpp"

namespace cyclops {

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitViolations = 1;
inline constexpr int kExitUsage = 2;

/// Default slice lines; each is clamped to the image height.
inline constexpr int kDefaultSliceLines[] = {128, 30, 464};

struct RunConfig {
  std::filesystem::path scene;
  std::filesystem::path output = "out";
  int downsample = 1;

  DescriptorKind descriptor = DescriptorKind::Census;
  int window = 7;
  std::vector<int> lines;  // empty: command default
  std::optional<int> d_min;
  std::optional<int> d_max;

  SolverParams solver;
  OcclusionParams occlusion;
  double pixel_tolerance = 0.5;  // Da Vinci jump/width agreement
  double layer_tolerance = 1.0;  // values closer than this share a cyclopean cell
  std::size_t max_opaque = 0;
  std::size_t max_davinci = 0;

  double spread_threshold = 0.1;
  double mode_threshold = 0.1;
  int mode_separation = 2;

  std::filesystem::path prediction;
  std::filesystem::path ground_truth;
  int histogram_bins = 32;

  SceneSpec scene_spec;
};

/// Each command writes its artefacts and a JSON report into config.output and
/// returns an exit code. Errors are reported on `err` and map to kExitUsage.
int cmd_slice(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_validate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_solve(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_bias(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_gen(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Default lines clamped to [0, height) with duplicates removed, or the
/// requested lines after a range check.
std::vector<int> select_lines(const std::vector<int>& requested, int height);

}  // namespace cyclops

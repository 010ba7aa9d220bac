#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cyclops/constraints.hpp"
#include "cyclops/features.hpp"
#include "cyclops/geometry.hpp"
#include "cyclops/image_io.hpp"
#include "cyclops/middlebury_io.hpp"
#include "cyclops/solver.hpp"

namespace cyclops {

// Evaluation -----------------------------------------------------------------

inline constexpr double kDefaultThresholds[] = {0.5, 1.0, 2.0, 4.0};

struct Metrics {
  std::vector<double> thresholds;
  std::vector<double> bad;  // fraction of finite-GT pixels with error > threshold or no prediction
  double mean_abs_error = 0.0;
  double rms_error = 0.0;
  double coverage = 0.0;        // pixels with finite GT and prediction / all pixels
  std::size_t gt_pixels = 0;    // finite GT
  std::size_t evaluated = 0;    // finite GT and finite prediction
  std::size_t total_pixels = 0;
};

/// Throws DimensionMismatch when size or view differ.
Metrics eval_metrics(const DisparityMap& pred, const DisparityMap& gt,
                     std::span<const double> thresholds = kDefaultThresholds);

// Depth bias -----------------------------------------------------------------

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> counts;
};

struct PixelLocation {
  int x = 0;
  int y = 0;
};

struct BiasStats {
  std::size_t count = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  PixelLocation argmin;
  PixelLocation argmax;
  Histogram histogram;
};

/// Per-pixel relative differences between eye distance and cyclopean depth,
/// (D_L - Z)/Z and (D_R - Z)/Z, for every finite disparity of a left-view map.
struct BiasReport {
  Grid<double> left_ratio;   // unknown where skipped
  Grid<double> right_ratio;
  BiasStats left;
  BiasStats right;
  std::size_t skipped = 0;   // unknown disparity or point at infinity
  double max_residual_left = 0.0;
  double max_residual_right = 0.0;
};

BiasReport compute_bias(const DisparityMap& gt_left, const CameraRig& rig, int bins = 32);

// Renders ------------------------------------------------------------------

struct SliceOverlay {
  std::optional<std::vector<double>> gt_left;   // one row of the left GT map
  std::optional<std::vector<double>> gt_right;
  std::vector<OcclusionRun> runs;
  std::vector<Discontinuity> discontinuities;
  const ScanlinePath* path = nullptr;
};

inline constexpr Rgb kInvalidColor{32, 48, 96};
inline constexpr Rgb kGtColor{230, 30, 30};
inline constexpr Rgb kRunColor{40, 200, 60};
inline constexpr Rgb kDiscColor{250, 200, 0};
inline constexpr Rgb kPathColor{40, 120, 255};

/// LR-space heatmap: row l, column r, gray fm * 255 (dark is a good match).
RgbImage render_lr_slice(const CostSlice& slice, const SliceOverlay& overlay = {});

/// The same costs on the XD grid: column k = 2x, row d - d_min.
RgbImage render_xd_slice(const CostSlice& slice, const ScanlinePath* path = nullptr);

/// Fixed gray level per label.
Grid<std::uint8_t> render_labels(const Grid<std::uint8_t>& labels);

}  // namespace cyclops

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cyclops/features.hpp"
#include "cyclops/middlebury_io.hpp"

namespace cyclops {

// Cyclopean surfaces ------------------------------------------------------

enum class CellKind { Empty, Matched, LOccluded, ROccluded, MultiLayer };

const char* to_string(CellKind kind);

struct SurfaceCell {
  CellKind kind = CellKind::Empty;
  /// One value for Matched, >= 2 distinct values for MultiLayer. Occluded
  /// cells may carry the disparity of their diagonal; Empty cells carry none.
  std::vector<double> disparities;
};

/// The disparity assignment d(e, x) of one epipolar line over the 2N
/// half-grid positions (cell k is x = k/2).
struct CyclopeanSurface {
  int e = 0;
  int width = 0;
  std::vector<SurfaceCell> cells;

  CyclopeanSurface() = default;
  CyclopeanSurface(int line, int image_width)
      : e(line), width(image_width), cells(static_cast<std::size_t>(2 * image_width)) {}

  int half_width() const { return 2 * width; }
  const SurfaceCell& cell(int k) const { return cells[static_cast<std::size_t>(k)]; }
  SurfaceCell& cell(int k) { return cells[static_cast<std::size_t>(k)]; }
};

/// Half-grid index of the cyclopean x for a real 2x: nearest half step,
/// ties towards lower x.
int nearest_half_index(double two_x);

/// Builds one surface per image row from GT disparities. With both maps,
/// only left-right consistent pixels are binocular matches; half-occluded
/// and out-of-frame pixels are skipped even when the GT fills them. Values
/// closer than `tol` merge; cells holding values further apart become
/// MultiLayer.
std::vector<CyclopeanSurface> gt_to_cyclopean(const DisparityMap* gt_left, const DisparityMap* gt_right,
                                              double tol);

/// Cyclopean disparity map (2N columns): Matched cells carry their value,
/// everything else is unknown.
DisparityMap surfaces_to_map(std::span<const CyclopeanSurface> surfaces);

// Half-occlusions and discontinuities --------------------------------------

enum class Side { Left, Right };

const char* to_string(Side s);

/// A maximal run of pixels seen by one eye only. `side` names the view the
/// pixels belong to (the only eye that sees them); [start, end) are columns
/// of that view.
struct OcclusionRun {
  int e = 0;
  Side side = Side::Left;
  int start = 0;
  int end = 0;

  int width() const { return end - start; }
  friend bool operator==(const OcclusionRun&, const OcclusionRun&) = default;
};

/// A disparity jump between columns `position` and `position + 1` of the
/// `side` view's map.
struct Discontinuity {
  int e = 0;
  Side side = Side::Left;
  int position = 0;
  double d_before = 0.0;
  double d_after = 0.0;

  double jump() const { return d_after > d_before ? d_after - d_before : d_before - d_after; }
  friend bool operator==(const Discontinuity&, const Discontinuity&) = default;
};

struct LineOcclusions {
  int e = 0;
  std::vector<OcclusionRun> runs;
  /// Runs whose partners fall outside the other frame or that reach either
  /// end of the line; their extent is set by the border, not by a jump.
  /// They are reported but take no part in the Da Vinci check.
  std::vector<OcclusionRun> frame_runs;
  std::vector<Discontinuity> discontinuities;
};

struct OcclusionParams {
  double lr_tolerance = 1.0;
  double jump_threshold = 2.0;
};

struct OcclusionReport {
  int width = 0;
  OcclusionParams params;
  std::vector<LineOcclusions> lines;

  std::size_t run_count() const;
  std::size_t discontinuity_count() const;
};

/// Left-right consistency analysis of a GT pair. A finite left pixel is
/// hidden from the right eye when its partner is unknown or disagrees by
/// more than lr_tolerance; an unknown left pixel is hidden when no right
/// pixel lands on it. Symmetrically for the right view.
OcclusionReport detect_half_occlusions(const DisparityMap& gt_left, const DisparityMap& gt_right,
                                       const OcclusionParams& params = {});

// Validators ----------------------------------------------------------------

struct OpaqueViolation {
  int e = 0;
  double x = 0.0;
  std::vector<double> disparities;
};

struct DaVinciMismatch {
  int e = 0;
  std::optional<Discontinuity> discontinuity;
  std::optional<OcclusionRun> run;
  double jump = 0.0;
  int width = 0;
  double residual = 0.0;
};

struct ConstraintViolations {
  std::vector<OpaqueViolation> opaque_violations;
  std::vector<DaVinciMismatch> davinci_mismatches;

  bool passes() const { return opaque_violations.empty() && davinci_mismatches.empty(); }
};

/// Every MultiLayer cell whose disparity spread exceeds `tol` violates the
/// one-disparity-per-(e, x) rule.
ConstraintViolations check_opaque_gc(std::span<const CyclopeanSurface> surfaces, double tol);

/// Pairs each discontinuity with the nearest occlusion run overlapping its
/// footprint: within the jump of the boundary in the same view, or the
/// warped boundary interval in the other view. A jump to a nearer surface
/// pairs with left-view runs, a jump to a farther one with right-view runs.
/// Ties prefer the wider run. Jump/width disagreement beyond pixel_tol,
/// unpaired discontinuities and unpaired runs wider than the jump threshold
/// are mismatches.
ConstraintViolations check_da_vinci_gc(const OcclusionReport& report, double pixel_tol);

/// Extent, in pixel units, of the cyclopean cells left unseen between the two
/// surfaces meeting at `disc`. Each matched cell covers one pixel of x.
double cyclopean_gap_width(const CyclopeanSurface& surface, const Discontinuity& disc);

// Ambiguity detectors -------------------------------------------------------

/// Flags x (per half-grid cell) whose valid fm values along d span less than
/// spread_threshold. Cells with fewer than two valid values are not flagged.
std::vector<bool> homogeneity_mask(const CostSlice& slice, double spread_threshold);

struct ModeMap {
  std::vector<int> counts;
  std::vector<std::vector<int>> modes;  // selected disparities per cell, ascending
};

/// Local minima of fm along d (a plateau counts once, at its lowest d)
/// within rel_threshold * (max - min) of the per-x minimum, greedily kept
/// from best to worst when at least min_separation away from every kept mode.
ModeMap multimodality_map(const CostSlice& slice, double rel_threshold, int min_separation);

}  // namespace cyclops

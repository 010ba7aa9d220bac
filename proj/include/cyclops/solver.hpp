#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cyclops/constraints.hpp"
#include "cyclops/features.hpp"
#include "cyclops/middlebury_io.hpp"

namespace cyclops {

enum class StepState { Match, LOcc, ROcc };

const char* to_string(StepState s);

/// One half-grid cell of a scanline path. Occluded cells inside a jump carry
/// the disparity of their 45-degree diagonal; cells of the border prefix
/// (LOcc) or suffix (ROcc) are not on any diagonal and have boundary = true.
struct PathStep {
  StepState state = StepState::Match;
  int d = 0;
  bool boundary = false;

  friend bool operator==(const PathStep&, const PathStep&) = default;
};

struct ScanlinePath {
  int e = 0;
  std::vector<PathStep> steps;  // one per half-grid cell k
  double total_cost = 0.0;

  int half_width() const { return static_cast<int>(steps.size()); }
  std::size_t occluded_count() const;
  friend bool operator==(const ScanlinePath&, const ScanlinePath&) = default;
};

/// Which surface wins among equal-cost paths.
enum class TieBreak { PreferFar, PreferNear };

const char* to_string(TieBreak t);
TieBreak tie_break_from_string(const std::string& s);

struct SolverParams {
  double occlusion_penalty = 0.3;
  int continuity_band = 0;
  TieBreak tie_break = TieBreak::PreferFar;
  /// Lines whose every half-grid cell has an fm spread below this are left
  /// unknown. Zero disables the check.
  double homogeneity_threshold = 0.0;

  void validate() const;
};

/// Exact minimiser of sum fm(Match) + kappa * #occluded over legal paths.
/// Ties resolve by the total disparity (low for PreferFar, high for
/// PreferNear), then by the leftmost occlusions.
ScanlinePath solve_scanline(const CostSlice& slice, const SolverParams& params);

/// Exhaustive search over the same path space; tiny instances only.
ScanlinePath brute_force_scanline(const CostSlice& slice, const SolverParams& params);

inline constexpr int kBruteForceMaxWidth = 10;
inline constexpr int kBruteForceMaxRange = 6;

/// Cost of a path under the solver energy, summed left to right.
double path_cost(const CostSlice& slice, const ScanlinePath& path, const SolverParams& params);

/// Checks the structural path rules (transitions, validity of matched cells).
/// Returns a description of the first problem, or nullopt.
std::optional<std::string> path_violation(const CostSlice& slice, const ScanlinePath& path,
                                          const SolverParams& params);

/// Dense d over the half grid: matched cells keep their value, jump cells
/// take the farther side of the jump, border runs their single neighbour.
std::vector<double> fill_occlusions(const ScanlinePath& path);

enum class CellLabel : std::uint8_t { Unknown = 0, Match = 1, LOcc = 2, ROcc = 3, Filled = 4 };

const char* to_string(CellLabel l);

struct SolvedImage {
  DisparityMap disparity;  // cyclopean view, 2N columns
  Grid<std::uint8_t> labels;
  std::vector<std::optional<ScanlinePath>> paths;  // per line; nullopt when unknown
  std::vector<int> unknown_lines;
};

/// Solves every line independently (in parallel). A missing or degenerate
/// slice leaves its line unknown.
SolvedImage solve_image(std::span<const std::optional<CostSlice>> slices, int width,
                        const SolverParams& params);

/// Path as a cyclopean surface: Match cells are Matched, jump cells are
/// occluded with their diagonal d, border cells occluded without d.
CyclopeanSurface path_to_surface(const ScanlinePath& path, int width);

struct ImpliedMaps {
  std::vector<double> left;
  std::vector<double> right;
};

/// Per-view disparities implied by the matched cells of a path; pixels
/// without a match are unknown.
ImpliedMaps implied_lr(const ScanlinePath& path, int width);

}  // namespace cyclops

#pragma once

// Cyclopean (XD) coordinates for a rectified stereo pair.
//
// A match between left column l and right column r on epipolar line e maps to
// the cyclopean column x = (l + r) / 2 and disparity d = l - r. For integer
// image columns x lives on a half-pixel grid with 2N positions per line.

namespace cyclops {

struct PixelMatch {
  int e = 0;
  double l = 0.0;
  double r = 0.0;

  friend bool operator==(const PixelMatch&, const PixelMatch&) = default;
};

struct CyclopeanCoord {
  int e = 0;
  double x = 0.0;
  double d = 0.0;

  friend bool operator==(const CyclopeanCoord&, const CyclopeanCoord&) = default;
};

/// Rectified two-camera calibration in dataset convention.
///
/// `doffs` is the x-difference of the principal points (cx_right - cx_left);
/// depth is focal_px * baseline / (d + doffs).
struct CameraRig {
  double focal_px = 0.0;
  double baseline = 0.0;
  double doffs = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
  int ndisp = 0;

  /// Throws InvalidArgument when a field violates its domain.
  void validate() const;

  /// Principal point of the virtual camera midway between the two eyes.
  double cyclopean_cx() const { return cx + 0.5 * doffs; }

  friend bool operator==(const CameraRig&, const CameraRig&) = default;
};

struct EyeDepths {
  double cyclopean = 0.0;
  double left = 0.0;
  double right = 0.0;
};

struct EyeLateralOffsets {
  double left = 0.0;
  double right = 0.0;
};

CyclopeanCoord lr_to_xd(const PixelMatch& m);

/// Inverse of lr_to_xd. Throws OutOfBounds when l or r leaves [0, width).
PixelMatch xd_to_lr(const CyclopeanCoord& c, int width);

/// Unchecked inverse, for callers that bound-check themselves.
PixelMatch xd_to_lr_unchecked(const CyclopeanCoord& c);

/// True when x + d/2 and x - d/2 are both integers.
bool on_half_grid(const CyclopeanCoord& c);

/// Number of cyclopean x positions per epipolar line: 0, 1/2, ..., N - 1/2.
constexpr int half_grid_size(int width) { return 2 * width; }

/// Half-grid index k = 2x.
constexpr double half_index_to_x(int k) { return 0.5 * k; }

/// Throws AtInfinity when d + doffs <= 0.
double disparity_to_depth(const CameraRig& rig, double d);

/// Throws InvalidArgument when z <= 0.
double depth_to_disparity(const CameraRig& rig, double z);

/// Metric lateral distance of a point at cyclopean column x and depth z from
/// the cyclopean optical axis. Positive towards increasing image columns.
double lateral_offset(const CameraRig& rig, double x, double z);

/// Lateral offsets of the same point measured from each eye's optical axis.
/// Their difference is the baseline for a point at the depth of its match.
EyeLateralOffsets eye_lateral_offsets(const CameraRig& rig, double l, double r, double z);

/// Distances from each eye to a point at lateral offset X and cyclopean depth z.
/// X is measured positive towards the left eye, so X = B/2 lies on the left
/// eye's axis.
EyeDepths eye_depths(const CameraRig& rig, double lateral, double z);

}  // namespace cyclops

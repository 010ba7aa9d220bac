#include "cyclops/geometry.hpp"

#include <cmath>
#include <string>

#include "cyclops/error.hpp"

namespace cyclops {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::OutOfBounds: return "out of bounds";
    case ErrorCode::AtInfinity: return "at infinity";
    case ErrorCode::BadMagic: return "bad magic";
    case ErrorCode::Truncated: return "truncated";
    case ErrorCode::Parse: return "parse error";
    case ErrorCode::MissingKey: return "missing key";
    case ErrorCode::DimensionMismatch: return "dimension mismatch";
    case ErrorCode::DegenerateSlice: return "degenerate slice";
    case ErrorCode::InstanceTooLarge: return "instance too large";
    case ErrorCode::Io: return "i/o error";
  }
  return "unknown";
}

void CameraRig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (!(focal_px > 0.0)) fail("focal length must be positive");
  if (!(baseline > 0.0)) fail("baseline must be positive");
  if (ndisp <= 0) fail("ndisp must be positive");
  if (width <= 0 || height <= 0) fail("image extents must be positive");
  if (!(doffs >= 0.0)) fail("doffs must be non-negative");
}

CyclopeanCoord lr_to_xd(const PixelMatch& m) {
  return {m.e, 0.5 * (m.l + m.r), m.l - m.r};
}

PixelMatch xd_to_lr_unchecked(const CyclopeanCoord& c) {
  return {c.e, c.x + 0.5 * c.d, c.x - 0.5 * c.d};
}

PixelMatch xd_to_lr(const CyclopeanCoord& c, int width) {
  PixelMatch m = xd_to_lr_unchecked(c);
  auto inside = [width](double v) { return v >= 0.0 && v < static_cast<double>(width); };
  if (!inside(m.l) || !inside(m.r)) {
    throw Error(ErrorCode::OutOfBounds,
                "cyclopean (x=" + std::to_string(c.x) + ", d=" + std::to_string(c.d) +
                    ") maps to l=" + std::to_string(m.l) + ", r=" + std::to_string(m.r));
  }
  return m;
}

bool on_half_grid(const CyclopeanCoord& c) {
  const PixelMatch m = xd_to_lr_unchecked(c);
  return std::floor(m.l) == m.l && std::floor(m.r) == m.r;
}

double disparity_to_depth(const CameraRig& rig, double d) {
  const double effective = d + rig.doffs;
  if (!(effective > 0.0)) {
    throw Error(ErrorCode::AtInfinity, "non-positive effective disparity " + std::to_string(effective));
  }
  return rig.focal_px * rig.baseline / effective;
}

double depth_to_disparity(const CameraRig& rig, double z) {
  if (!(z > 0.0)) throw Error(ErrorCode::InvalidArgument, "depth must be positive");
  return rig.focal_px * rig.baseline / z - rig.doffs;
}

double lateral_offset(const CameraRig& rig, double x, double z) {
  return z * (x - rig.cyclopean_cx()) / rig.focal_px;
}

EyeLateralOffsets eye_lateral_offsets(const CameraRig& rig, double l, double r, double z) {
  return {z * (l - rig.cx) / rig.focal_px, z * (r - (rig.cx + rig.doffs)) / rig.focal_px};
}

EyeDepths eye_depths(const CameraRig& rig, double lateral, double z) {
  if (!(z > 0.0)) throw Error(ErrorCode::InvalidArgument, "depth must be positive");
  const double half_b = 0.5 * rig.baseline;
  const double to_left = half_b - lateral;
  const double to_right = half_b + lateral;
  return {z, std::sqrt(z * z + to_left * to_left), std::sqrt(z * z + to_right * to_right)};
}

}  // namespace cyclops

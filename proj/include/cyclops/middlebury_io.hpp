#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cyclops/geometry.hpp"
#include "cyclops/grid.hpp"

namespace cyclops {

enum class View { Left, Right, Cyclopean };

const char* to_string(View v);

inline constexpr double kUnknownDisparity = std::numeric_limits<double>::infinity();

inline bool is_known(double d) { return d != kUnknownDisparity && d == d; }

/// Per-pixel disparity for one view. Unknown pixels hold +infinity.
/// A Cyclopean map has 2N columns, one per half-grid position.
struct DisparityMap {
  View view = View::Left;
  Grid<double> values;

  int width() const { return values.width(); }
  int height() const { return values.height(); }
  double operator()(int x, int y) const { return values(x, y); }

  /// Fraction of pixels holding a finite disparity.
  double known_fraction() const;

  friend bool operator==(const DisparityMap&, const DisparityMap&) = default;
};

struct ScenePair {
  std::string name;
  Image left_image;
  Image right_image;
  std::optional<DisparityMap> gt_left;
  std::optional<DisparityMap> gt_right;
  CameraRig rig;

  int width() const { return left_image.width(); }
  int height() const { return left_image.height(); }
};

// PFM ---------------------------------------------------------------------

/// Parses a single-channel PFM. Rows are returned top-to-bottom.
DisparityMap parse_pfm(std::span<const std::uint8_t> bytes, View view = View::Left);

/// Canonical encoding: "Pf", scale -1.0 (little-endian), bottom-up rows.
std::vector<std::uint8_t> write_pfm(const DisparityMap& map);

/// Same as write_pfm but with an explicit scale; positive scale selects
/// big-endian payload.
std::vector<std::uint8_t> write_pfm(const DisparityMap& map, double scale);

DisparityMap read_pfm_file(const std::filesystem::path& path, View view = View::Left);
void write_pfm_file(const std::filesystem::path& path, const DisparityMap& map);

// calib.txt ---------------------------------------------------------------

struct CalibParseResult {
  CameraRig rig;
  std::vector<std::string> warnings;
};

/// Parses a Middlebury calib.txt. Throws MissingKey / Parse.
CalibParseResult parse_calib_with_warnings(std::string_view text);
CameraRig parse_calib(std::string_view text);

/// Writes calib.txt with cam0 == cam1 shifted by doffs.
std::string format_calib(const CameraRig& rig);

// Scenes ------------------------------------------------------------------

/// Luma weights used for every RGB to intensity conversion.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

/// Loads im0/im1 (png, pgm or ppm), calib.txt and optional disp0/disp1.pfm.
ScenePair load_scene(const std::filesystem::path& dir);

/// Writes the layout read by load_scene. Images are quantized to 8 bits.
void write_scene(const std::filesystem::path& dir, const ScenePair& scene);

/// Reduces a scene by an integer factor: images are box-averaged, GT is
/// subsampled and divided by the factor, and the rig is rescaled.
ScenePair downsample_scene(const ScenePair& scene, int factor);

/// Writes bytes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace cyclops

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cyclops/geometry.hpp"
#include "cyclops/grid.hpp"

namespace cyclops {

enum class DescriptorKind { Census, ZeroMeanPatch };

const char* to_string(DescriptorKind kind);
DescriptorKind descriptor_kind_from_string(const std::string& name);

struct DescriptorConfig {
  DescriptorKind kind = DescriptorKind::Census;
  int window = 7;
};

/// Dense per-pixel descriptors for one image.
///
/// Census descriptors are bit vectors (bit set when the window sample is
/// brighter than the centre), packed into 64-bit words. Samples in columns
/// outside the image are masked out: their bits are 0 and similarity only
/// counts bits valid in both descriptors. Rows are clamped. Zero-mean patch
/// descriptors are mean-subtracted, L2-normalised window vectors over the
/// clamped window; constant patches keep the zero vector.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(DescriptorKind kind, int window, int width, int height);

  DescriptorKind kind() const { return kind_; }
  int window() const { return window_; }
  int width() const { return width_; }
  int height() const { return height_; }

  /// Number of comparison bits (Census) or vector length (patch).
  int dimension() const { return dimension_; }
  int words_per_pixel() const { return words_; }

  std::span<std::uint64_t> census(int x, int y);
  std::span<const std::uint64_t> census(int x, int y) const;
  /// Census bits whose sample column lies inside the image, for column x.
  std::span<const std::uint64_t> census_mask(int x) const;
  std::span<float> patch(int x, int y);
  std::span<const float> patch(int x, int y) const;

 private:
  DescriptorKind kind_ = DescriptorKind::Census;
  int window_ = 0;
  int width_ = 0;
  int height_ = 0;
  int dimension_ = 0;
  int words_ = 0;
  std::vector<std::uint64_t> bits_;
  std::vector<std::uint64_t> masks_;
  std::vector<float> vectors_;
};

/// Throws InvalidArgument for even or < 3 windows and for windows larger
/// than the image.
FeatureMap compute_features(const Image& image, DescriptorKind kind, int window);
inline FeatureMap compute_features(const Image& image, const DescriptorConfig& config) {
  return compute_features(image, config.kind, config.window);
}

/// Feature-match similarity at cyclopean (e, x, d): the left descriptor is
/// sampled at x + d/2 and the right one at x - d/2, linearly interpolated
/// between columns for fractional positions. Larger is better; Census
/// scores lie in [0, 1], patch scores in [-1, 1]. Returns nullopt when a
/// sample leaves [0, N - 1] or e is not a valid row.
std::optional<double> fms(const FeatureMap& fl, const FeatureMap& fr, int e, double x, double d);

/// Matching costs for one epipolar line on the (half-grid x) x (integer d)
/// lattice. Column k of the internal grids is x = k/2; row i is
/// d = d_min + i. Invalid cells hold NaN.
class CostSlice {
 public:
  CostSlice() = default;
  CostSlice(int e, int width, int d_min, int d_max);

  /// Builds a slice from explicit normalised costs, indexed [d - d_min][k].
  /// NaN marks invalid cells. Raw scores are set to 1 - fm.
  static CostSlice from_costs(int e, int width, int d_min, std::span<const std::vector<double>> fm_rows);

  int line() const { return e_; }
  int width() const { return width_; }
  int half_width() const { return 2 * width_; }
  int d_min() const { return d_min_; }
  int d_max() const { return d_max_; }
  int num_disparities() const { return d_max_ - d_min_ + 1; }

  bool in_range(int k, int d) const { return k >= 0 && k < half_width() && d >= d_min_ && d <= d_max_; }
  bool valid(int k, int d) const;
  double fm(int k, int d) const { return fm_(k, d - d_min_); }
  double raw(int k, int d) const { return raw_(k, d - d_min_); }
  void set(int k, int d, double raw, double fm);

  std::size_t valid_count() const;

  /// All valid raw scores were equal, so the normalised costs carry no
  /// information (fm is 0 on every valid cell).
  bool flat() const { return flat_; }
  void set_flat(bool f) { flat_ = f; }

  /// Bitwise equality; invalid (NaN) cells compare equal to each other.
  friend bool operator==(const CostSlice& a, const CostSlice& b);

 private:
  int e_ = 0;
  int width_ = 0;
  int d_min_ = 0;
  int d_max_ = 0;
  bool flat_ = false;
  Grid<double> raw_;
  Grid<double> fm_;
};

/// Costs over d in [0, rig.ndisp]. Throws DegenerateSlice when no cell is valid.
CostSlice build_cost_slice(const FeatureMap& fl, const FeatureMap& fr, int e, const CameraRig& rig);
CostSlice build_cost_slice(const FeatureMap& fl, const FeatureMap& fr, int e, int d_min, int d_max);

/// One slice per line in `lines`, built in parallel; order follows `lines`.
/// Lines whose slice is degenerate yield nullopt.
std::vector<std::optional<CostSlice>> build_cost_slices(const FeatureMap& fl, const FeatureMap& fr,
                                                        std::span<const int> lines, int d_min, int d_max);

/// The slice re-indexed by image columns: value at (l, r) is fm at
/// x = (l + r)/2, d = l - r; NaN where d is outside the slice range.
class LrMatrix {
 public:
  explicit LrMatrix(int width) : values_(width, width, kInvalid()) {}

  static double kInvalid();

  int width() const { return values_.width(); }
  double at(int l, int r) const { return values_(r, l); }
  double& at(int l, int r) { return values_(r, l); }
  bool valid(int l, int r) const { return at(l, r) == at(l, r); }

 private:
  Grid<double> values_;  // row l, column r
};

LrMatrix slice_as_lr_matrix(const CostSlice& slice);

}  // namespace cyclops

#include "cyclops/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "cyclops/error.hpp"
#include "cyclops/parallel.hpp"

namespace cyclops {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int clamp_index(int v, int n) { return std::clamp(v, 0, n - 1); }

}  // namespace

const char* to_string(DescriptorKind kind) {
  return kind == DescriptorKind::Census ? "census" : "zero_mean_patch";
}

DescriptorKind descriptor_kind_from_string(const std::string& name) {
  if (name == "census") return DescriptorKind::Census;
  if (name == "zero_mean_patch" || name == "zmp" || name == "patch") return DescriptorKind::ZeroMeanPatch;
  throw Error(ErrorCode::InvalidArgument, "unknown descriptor kind '" + name + "'");
}

FeatureMap::FeatureMap(DescriptorKind kind, int window, int width, int height)
    : kind_(kind), window_(window), width_(width), height_(height) {
  const std::size_t pixels = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (kind == DescriptorKind::Census) {
    dimension_ = window * window - 1;
    words_ = (dimension_ + 63) / 64;
    bits_.assign(pixels * static_cast<std::size_t>(words_), 0);
    masks_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(words_), 0);
    const int radius = window / 2;
    for (int x = 0; x < width; ++x) {
      int bit = 0;
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          if (dx == 0 && dy == 0) continue;
          if (x + dx >= 0 && x + dx < width) {
            masks_[static_cast<std::size_t>(x) * words_ + bit / 64] |= std::uint64_t{1} << (bit % 64);
          }
          ++bit;
        }
      }
    }
  } else {
    dimension_ = window * window;
    vectors_.assign(pixels * static_cast<std::size_t>(dimension_), 0.0f);
  }
}

std::span<std::uint64_t> FeatureMap::census(int x, int y) {
  const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * words_;
  return {bits_.data() + i, static_cast<std::size_t>(words_)};
}
std::span<const std::uint64_t> FeatureMap::census(int x, int y) const {
  const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * words_;
  return {bits_.data() + i, static_cast<std::size_t>(words_)};
}
std::span<const std::uint64_t> FeatureMap::census_mask(int x) const {
  return {masks_.data() + static_cast<std::size_t>(x) * words_, static_cast<std::size_t>(words_)};
}
std::span<float> FeatureMap::patch(int x, int y) {
  const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * dimension_;
  return {vectors_.data() + i, static_cast<std::size_t>(dimension_)};
}
std::span<const float> FeatureMap::patch(int x, int y) const {
  const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * dimension_;
  return {vectors_.data() + i, static_cast<std::size_t>(dimension_)};
}

FeatureMap compute_features(const Image& image, DescriptorKind kind, int window) {
  if (window < 3 || window % 2 == 0) {
    throw Error(ErrorCode::InvalidArgument, "descriptor window must be odd and >= 3");
  }
  if (window > image.width() || window > image.height()) {
    throw Error(ErrorCode::InvalidArgument, "descriptor window larger than the image");
  }
  const int w = image.width();
  const int h = image.height();
  const int radius = window / 2;
  FeatureMap features(kind, window, w, h);
  std::vector<double> samples(static_cast<std::size_t>(window) * window);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::size_t n = 0;
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          samples[n++] = image(clamp_index(x + dx, w), clamp_index(y + dy, h));
        }
      }
      if (kind == DescriptorKind::Census) {
        const double centre = image(x, y);
        auto words = features.census(x, y);
        int bit = 0;
        for (std::size_t i = 0; i < samples.size(); ++i) {
          if (static_cast<int>(i) == radius * window + radius) continue;
          const int sx = x + static_cast<int>(i % static_cast<std::size_t>(window)) - radius;
          if (sx >= 0 && sx < w && samples[i] > centre) words[bit / 64] |= std::uint64_t{1} << (bit % 64);
          ++bit;
        }
      } else {
        const bool constant =
            std::all_of(samples.begin(), samples.end(), [&](double v) { return v == samples[0]; });
        auto out = features.patch(x, y);
        if (constant) continue;
        double mean = 0.0;
        for (double v : samples) mean += v;
        mean /= static_cast<double>(samples.size());
        double norm = 0.0;
        for (double v : samples) norm += (v - mean) * (v - mean);
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < samples.size(); ++i) out[i] = static_cast<float>((samples[i] - mean) / norm);
      }
    }
  }
  return features;
}

namespace {

// A descriptor sample at a fractional column: columns i0 and i1 with weight t on i1.
struct Sample {
  int i0 = 0;
  int i1 = 0;
  double t = 0.0;
};

std::optional<Sample> locate(double pos, int width) {
  if (!(pos >= 0.0) || pos > static_cast<double>(width - 1)) return std::nullopt;
  const double base = std::floor(pos);
  const int i0 = static_cast<int>(base);
  const double t = pos - base;
  return Sample{i0, t > 0.0 ? i0 + 1 : i0, t};
}

struct CensusDistance {
  double distance = 0.0;
  double bits = 0.0;
};

// Hamming distance between two census descriptors each taken either at one
// column (i0 == i1) or halfway between two columns. Works in half-bit units.
CensusDistance census_distance_half(const FeatureMap& fl, const FeatureMap& fr, int e, const Sample& ls,
                                    const Sample& rs) {
  const auto a0 = fl.census(ls.i0, e);
  const auto a1 = fl.census(ls.i1, e);
  const auto b0 = fr.census(rs.i0, e);
  const auto b1 = fr.census(rs.i1, e);
  const auto ma0 = fl.census_mask(ls.i0);
  const auto ma1 = fl.census_mask(ls.i1);
  const auto mb0 = fr.census_mask(rs.i0);
  const auto mb1 = fr.census_mask(rs.i1);
  long twice = 0;
  long bits = 0;
  for (int w = 0; w < fl.words_per_pixel(); ++w) {
    const std::uint64_t m = ma0[w] & ma1[w] & mb0[w] & mb1[w];
    bits += std::popcount(m);
    const std::uint64_t x2 = a0[w] & a1[w];
    const std::uint64_t x1 = a0[w] ^ a1[w];
    const std::uint64_t x0 = ~(a0[w] | a1[w]);
    const std::uint64_t y2 = b0[w] & b1[w];
    const std::uint64_t y1 = b0[w] ^ b1[w];
    const std::uint64_t y0 = ~(b0[w] | b1[w]);
    const std::uint64_t two = ((x2 & y0) | (x0 & y2)) & m;
    const std::uint64_t one = (x1 ^ y1) & m;
    twice += 2 * std::popcount(two) + std::popcount(one);
  }
  return {0.5 * static_cast<double>(twice), static_cast<double>(bits)};
}

CensusDistance census_distance_general(const FeatureMap& fl, const FeatureMap& fr, int e, const Sample& ls,
                                       const Sample& rs) {
  const auto a0 = fl.census(ls.i0, e);
  const auto a1 = fl.census(ls.i1, e);
  const auto b0 = fr.census(rs.i0, e);
  const auto b1 = fr.census(rs.i1, e);
  CensusDistance out;
  for (int bit = 0; bit < fl.dimension(); ++bit) {
    auto get = [bit](std::span<const std::uint64_t> v) {
      return static_cast<double>((v[bit / 64] >> (bit % 64)) & 1u);
    };
    if (get(fl.census_mask(ls.i0)) * get(fl.census_mask(ls.i1)) * get(fr.census_mask(rs.i0)) *
            get(fr.census_mask(rs.i1)) == 0.0) {
      continue;
    }
    out.bits += 1.0;
    const double a = (1.0 - ls.t) * get(a0) + ls.t * get(a1);
    const double b = (1.0 - rs.t) * get(b0) + rs.t * get(b1);
    out.distance += std::abs(a - b);
  }
  return out;
}

double patch_dot(const FeatureMap& fl, const FeatureMap& fr, int e, const Sample& ls, const Sample& rs) {
  const auto a0 = fl.patch(ls.i0, e);
  const auto a1 = fl.patch(ls.i1, e);
  const auto b0 = fr.patch(rs.i0, e);
  const auto b1 = fr.patch(rs.i1, e);
  double dot = 0.0;
  if (ls.t == 0.0 && rs.t == 0.0) {
    for (int i = 0; i < fl.dimension(); ++i) dot += static_cast<double>(a0[i]) * static_cast<double>(b0[i]);
    return dot;
  }
  for (int i = 0; i < fl.dimension(); ++i) {
    const double a = (1.0 - ls.t) * a0[i] + ls.t * a1[i];
    const double b = (1.0 - rs.t) * b0[i] + rs.t * b1[i];
    dot += a * b;
  }
  return dot;
}

double similarity(const FeatureMap& fl, const FeatureMap& fr, int e, const Sample& ls, const Sample& rs) {
  if (fl.kind() == DescriptorKind::ZeroMeanPatch) return patch_dot(fl, fr, e, ls, rs);
  const bool halves = (ls.t == 0.0 || ls.t == 0.5) && (rs.t == 0.0 || rs.t == 0.5);
  const auto c = halves ? census_distance_half(fl, fr, e, ls, rs) : census_distance_general(fl, fr, e, ls, rs);
  return (c.bits - c.distance) / c.bits;
}

void check_compatible(const FeatureMap& fl, const FeatureMap& fr) {
  if (fl.kind() != fr.kind() || fl.window() != fr.window() || fl.width() != fr.width() ||
      fl.height() != fr.height()) {
    throw Error(ErrorCode::DimensionMismatch, "left and right feature maps are incompatible");
  }
}

}  // namespace

std::optional<double> fms(const FeatureMap& fl, const FeatureMap& fr, int e, double x, double d) {
  check_compatible(fl, fr);
  if (e < 0 || e >= fl.height()) return std::nullopt;
  const auto ls = locate(x + 0.5 * d, fl.width());
  const auto rs = locate(x - 0.5 * d, fr.width());
  if (!ls || !rs) return std::nullopt;
  return similarity(fl, fr, e, *ls, *rs);
}

// CostSlice ---------------------------------------------------------------

CostSlice::CostSlice(int e, int width, int d_min, int d_max)
    : e_(e), width_(width), d_min_(d_min), d_max_(d_max),
      raw_(2 * width, d_max - d_min + 1, kNaN), fm_(2 * width, d_max - d_min + 1, kNaN) {
  if (width <= 0 || d_max < d_min) throw Error(ErrorCode::InvalidArgument, "empty cost slice extents");
}

CostSlice CostSlice::from_costs(int e, int width, int d_min, std::span<const std::vector<double>> fm_rows) {
  if (fm_rows.empty()) throw Error(ErrorCode::InvalidArgument, "no disparity rows");
  CostSlice slice(e, width, d_min, d_min + static_cast<int>(fm_rows.size()) - 1);
  for (std::size_t i = 0; i < fm_rows.size(); ++i) {
    if (static_cast<int>(fm_rows[i].size()) != 2 * width) {
      throw Error(ErrorCode::DimensionMismatch, "cost row length must be 2 * width");
    }
    for (int k = 0; k < 2 * width; ++k) {
      const double v = fm_rows[i][static_cast<std::size_t>(k)];
      if (v == v) slice.set(k, d_min + static_cast<int>(i), 1.0 - v, v);
    }
  }
  return slice;
}

bool CostSlice::valid(int k, int d) const {
  if (!in_range(k, d)) return false;
  const double v = fm_(k, d - d_min_);
  return v == v;
}

void CostSlice::set(int k, int d, double raw, double fm) {
  raw_(k, d - d_min_) = raw;
  fm_(k, d - d_min_) = fm;
}

std::size_t CostSlice::valid_count() const {
  return static_cast<std::size_t>(
      std::count_if(fm_.data().begin(), fm_.data().end(), [](double v) { return v == v; }));
}

bool operator==(const CostSlice& a, const CostSlice& b) {
  auto same = [](const Grid<double>& x, const Grid<double>& y) {
    if (x.width() != y.width() || x.height() != y.height()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (std::bit_cast<std::uint64_t>(x.data()[i]) != std::bit_cast<std::uint64_t>(y.data()[i])) return false;
    }
    return true;
  };
  return a.e_ == b.e_ && a.width_ == b.width_ && a.d_min_ == b.d_min_ && a.d_max_ == b.d_max_ &&
         a.flat_ == b.flat_ && same(a.raw_, b.raw_) && same(a.fm_, b.fm_);
}

CostSlice build_cost_slice(const FeatureMap& fl, const FeatureMap& fr, int e, const CameraRig& rig) {
  return build_cost_slice(fl, fr, e, 0, rig.ndisp);
}

CostSlice build_cost_slice(const FeatureMap& fl, const FeatureMap& fr, int e, int d_min, int d_max) {
  check_compatible(fl, fr);
  if (e < 0 || e >= fl.height()) throw Error(ErrorCode::OutOfBounds, "epipolar line out of range");
  const int n = fl.width();
  CostSlice slice(e, n, d_min, d_max);

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  std::vector<double> raw(static_cast<std::size_t>(slice.half_width()) * slice.num_disparities(), kNaN);
  for (int d = d_min; d <= d_max; ++d) {
    for (int k = 0; k < slice.half_width(); ++k) {
      // Doubled sample columns: 2l = k + d, 2r = k - d.
      const int l2 = k + d;
      const int r2 = k - d;
      if (l2 < 0 || r2 < 0 || l2 > 2 * (n - 1) || r2 > 2 * (n - 1)) continue;
      const Sample ls{l2 / 2, (l2 + 1) / 2, (l2 % 2) ? 0.5 : 0.0};
      const Sample rs{r2 / 2, (r2 + 1) / 2, (r2 % 2) ? 0.5 : 0.0};
      const double s = similarity(fl, fr, e, ls, rs);
      raw[static_cast<std::size_t>(d - d_min) * slice.half_width() + k] = s;
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
  }
  if (!(lo <= hi)) throw Error(ErrorCode::DegenerateSlice, "slice for line " + std::to_string(e) + " has no valid cells");

  // Scores are shifted to be non-negative before dividing by the maximum, so
  // fm stays in [0, 1] and its minimum is exactly 0.
  const double shift = lo < 0.0 ? -lo : 0.0;
  const double top = hi + shift;
  slice.set_flat(lo == hi || !(top > 0.0));
  for (int d = d_min; d <= d_max; ++d) {
    for (int k = 0; k < slice.half_width(); ++k) {
      const double s = raw[static_cast<std::size_t>(d - d_min) * slice.half_width() + k];
      if (s != s) continue;
      const double fm = slice.flat() ? 0.0 : 1.0 - (s + shift) / top;
      slice.set(k, d, s, fm);
    }
  }
  return slice;
}

std::vector<std::optional<CostSlice>> build_cost_slices(const FeatureMap& fl, const FeatureMap& fr,
                                                        std::span<const int> lines, int d_min, int d_max) {
  std::vector<std::optional<CostSlice>> out(lines.size());
  parallel_for(static_cast<int>(lines.size()), [&](int i) {
    try {
      out[static_cast<std::size_t>(i)] = build_cost_slice(fl, fr, lines[static_cast<std::size_t>(i)], d_min, d_max);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::DegenerateSlice) throw;
    }
  });
  return out;
}

// LR view -----------------------------------------------------------------

double LrMatrix::kInvalid() { return kNaN; }

LrMatrix slice_as_lr_matrix(const CostSlice& slice) {
  LrMatrix m(slice.width());
  for (int l = 0; l < slice.width(); ++l) {
    for (int r = 0; r < slice.width(); ++r) {
      const int d = l - r;
      const int k = l + r;
      if (d < slice.d_min() || d > slice.d_max()) continue;
      m.at(l, r) = slice.fm(k, d);
    }
  }
  return m;
}

}  // namespace cyclops

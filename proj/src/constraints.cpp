#include "cyclops/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cyclops/error.hpp"

namespace cyclops {

const char* to_string(CellKind kind) {
  switch (kind) {
    case CellKind::Empty: return "empty";
    case CellKind::Matched: return "matched";
    case CellKind::LOccluded: return "l_occluded";
    case CellKind::ROccluded: return "r_occluded";
    case CellKind::MultiLayer: return "multi_layer";
  }
  return "unknown";
}

const char* to_string(Side s) { return s == Side::Left ? "L" : "R"; }

int nearest_half_index(double two_x) { return static_cast<int>(std::ceil(two_x - 0.5)); }

namespace {

// Partner disparity lookup at a real column, nearest pixel.
std::optional<double> value_at(std::span<const double> row, double pos) {
  const double n = static_cast<double>(row.size());
  if (!(pos >= -0.5) || !(pos < n - 0.5)) return std::nullopt;
  const auto i = static_cast<std::size_t>(std::clamp(std::lround(pos), 0L, static_cast<long>(row.size()) - 1));
  return row[i];
}

bool consistent(double d, std::span<const double> other, double partner_pos, double tol) {
  const auto v = value_at(other, partner_pos);
  return v && is_known(*v) && std::abs(*v - d) <= tol;
}

void check_same_size(const DisparityMap& a, const DisparityMap& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorCode::DimensionMismatch, "left and right GT maps differ in size");
  }
}

}  // namespace

std::vector<CyclopeanSurface> gt_to_cyclopean(const DisparityMap* gt_left, const DisparityMap* gt_right,
                                              double tol) {
  if (!gt_left && !gt_right) throw Error(ErrorCode::InvalidArgument, "no GT map given");
  if (gt_left && gt_right) check_same_size(*gt_left, *gt_right);
  const DisparityMap& ref = gt_left ? *gt_left : *gt_right;
  const int n = ref.width();
  std::vector<CyclopeanSurface> out;
  out.reserve(static_cast<std::size_t>(ref.height()));

  for (int e = 0; e < ref.height(); ++e) {
    std::vector<std::vector<double>> bins(static_cast<std::size_t>(2 * n));
    auto emit = [&](double two_x, double d) {
      const int k = nearest_half_index(two_x);
      if (k >= 0 && k < 2 * n) bins[static_cast<std::size_t>(k)].push_back(d);
    };
    const bool both = gt_left && gt_right;
    if (gt_left) {
      const auto row = gt_left->values.row(e);
      for (int l = 0; l < n; ++l) {
        const double d = row[static_cast<std::size_t>(l)];
        if (!is_known(d)) continue;
        if (both && !consistent(d, gt_right->values.row(e), l - d, tol)) continue;
        emit(2.0 * l - d, d);
      }
    }
    if (gt_right) {
      const auto row = gt_right->values.row(e);
      for (int r = 0; r < n; ++r) {
        const double d = row[static_cast<std::size_t>(r)];
        if (!is_known(d)) continue;
        if (both && !consistent(d, gt_left->values.row(e), r + d, tol)) continue;
        emit(2.0 * r + d, d);
      }
    }

    CyclopeanSurface surface(e, n);
    for (int k = 0; k < 2 * n; ++k) {
      auto& values = bins[static_cast<std::size_t>(k)];
      if (values.empty()) continue;
      std::sort(values.begin(), values.end());
      // Group sorted values whose neighbours are within tol; each group is one layer.
      std::vector<double> layers;
      double sum = values[0];
      int count = 1;
      for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] - values[i - 1] > tol) {
          layers.push_back(sum / count);
          sum = 0.0;
          count = 0;
        }
        sum += values[i];
        ++count;
      }
      layers.push_back(sum / count);
      auto& cell = surface.cell(k);
      cell.kind = layers.size() == 1 ? CellKind::Matched : CellKind::MultiLayer;
      cell.disparities = std::move(layers);
    }
    out.push_back(std::move(surface));
  }
  return out;
}

DisparityMap surfaces_to_map(std::span<const CyclopeanSurface> surfaces) {
  if (surfaces.empty()) throw Error(ErrorCode::InvalidArgument, "no surfaces");
  const int w = surfaces.front().half_width();
  DisparityMap map{View::Cyclopean, Grid<double>(w, static_cast<int>(surfaces.size()), kUnknownDisparity)};
  for (std::size_t y = 0; y < surfaces.size(); ++y) {
    const auto& s = surfaces[y];
    for (int k = 0; k < std::min(w, s.half_width()); ++k) {
      if (s.cell(k).kind == CellKind::Matched) map.values(k, static_cast<int>(y)) = s.cell(k).disparities.front();
    }
  }
  return map;
}

// Half-occlusions ---------------------------------------------------------

std::size_t OcclusionReport::run_count() const {
  std::size_t n = 0;
  for (const auto& l : lines) n += l.runs.size();
  return n;
}

std::size_t OcclusionReport::discontinuity_count() const {
  std::size_t n = 0;
  for (const auto& l : lines) n += l.discontinuities.size();
  return n;
}

namespace {

enum class PixelState { Visible, Hidden, OutOfFrame };

// Classifies the pixels of one view's row. `sign` is -1 for the left view
// (partner column p - d) and +1 for the right view (p + d).
std::vector<PixelState> classify_row(std::span<const double> own, std::span<const double> other, int sign,
                                     double tol, bool any_data) {
  const int n = static_cast<int>(own.size());
  std::vector<bool> covered(static_cast<std::size_t>(n), false);
  for (int q = 0; q < n; ++q) {
    const double d = other[static_cast<std::size_t>(q)];
    if (!is_known(d)) continue;
    const long p = std::lround(q - sign * d);
    if (p >= 0 && p < n) covered[static_cast<std::size_t>(p)] = true;
  }
  std::vector<PixelState> state(static_cast<std::size_t>(n), PixelState::Visible);
  if (!any_data) return state;
  for (int p = 0; p < n; ++p) {
    const double d = own[static_cast<std::size_t>(p)];
    auto& s = state[static_cast<std::size_t>(p)];
    if (is_known(d)) {
      const double partner = p + sign * d;
      if (!(partner >= -0.5) || !(partner < n - 0.5)) {
        s = PixelState::OutOfFrame;
      } else if (!consistent(d, other, partner, tol)) {
        s = PixelState::Hidden;
      }
    } else if (!covered[static_cast<std::size_t>(p)]) {
      s = PixelState::Hidden;
    }
  }
  return state;
}

// Groups non-visible pixels into runs. A run touching the border through
// which the other camera's frame ends is a frame run.
void collect_runs(const std::vector<PixelState>& state, int e, Side side, LineOcclusions& out) {
  const int n = static_cast<int>(state.size());
  int p = 0;
  while (p < n) {
    if (state[static_cast<std::size_t>(p)] == PixelState::Visible) {
      ++p;
      continue;
    }
    const int start = p;
    bool frame = false;
    while (p < n && state[static_cast<std::size_t>(p)] != PixelState::Visible) {
      frame = frame || state[static_cast<std::size_t>(p)] == PixelState::OutOfFrame;
      ++p;
    }
    const OcclusionRun run{e, side, start, p};
    // A run reaching either end of the line has no jump on its outer side.
    const bool at_border = start == 0 || p == n;
    (frame || at_border ? out.frame_runs : out.runs).push_back(run);
  }
}

void collect_discontinuities(std::span<const double> row, int e, Side side, double threshold,
                             LineOcclusions& out) {
  for (std::size_t p = 0; p + 1 < row.size(); ++p) {
    const double a = row[p];
    const double b = row[p + 1];
    if (is_known(a) && is_known(b) && std::abs(b - a) > threshold) {
      out.discontinuities.push_back({e, side, static_cast<int>(p), a, b});
    }
  }
}

}  // namespace

OcclusionReport detect_half_occlusions(const DisparityMap& gt_left, const DisparityMap& gt_right,
                                       const OcclusionParams& params) {
  check_same_size(gt_left, gt_right);
  OcclusionReport report;
  report.width = gt_left.width();
  report.params = params;
  for (int e = 0; e < gt_left.height(); ++e) {
    const auto lrow = gt_left.values.row(e);
    const auto rrow = gt_right.values.row(e);
    const bool any = std::any_of(lrow.begin(), lrow.end(), is_known) ||
                     std::any_of(rrow.begin(), rrow.end(), is_known);
    LineOcclusions line;
    line.e = e;
    collect_runs(classify_row(lrow, rrow, -1, params.lr_tolerance, any), e, Side::Left, line);
    collect_runs(classify_row(rrow, lrow, +1, params.lr_tolerance, any), e, Side::Right, line);
    collect_discontinuities(lrow, e, Side::Left, params.jump_threshold, line);
    collect_discontinuities(rrow, e, Side::Right, params.jump_threshold, line);
    report.lines.push_back(std::move(line));
  }
  return report;
}

// Validators --------------------------------------------------------------

ConstraintViolations check_opaque_gc(std::span<const CyclopeanSurface> surfaces, double tol) {
  ConstraintViolations v;
  for (const auto& s : surfaces) {
    for (int k = 0; k < s.half_width(); ++k) {
      const auto& cell = s.cell(k);
      if (cell.kind != CellKind::MultiLayer || cell.disparities.size() < 2) continue;
      const auto [lo, hi] = std::minmax_element(cell.disparities.begin(), cell.disparities.end());
      if (*hi - *lo > tol) v.opaque_violations.push_back({s.e, 0.5 * k, cell.disparities});
    }
  }
  return v;
}

namespace {

struct Candidate {
  std::size_t run = 0;
  double distance = 0.0;
};

// Distance between integer run [s, e) and real interval [a, b]; 0 on overlap.
double interval_gap(int s, int e, double a, double b) {
  const double lo = s;
  const double hi = e - 1;
  if (hi < a) return a - hi;
  if (lo > b) return lo - b;
  return 0.0;
}

}  // namespace

ConstraintViolations check_da_vinci_gc(const OcclusionReport& report, double pixel_tol) {
  ConstraintViolations v;
  for (const auto& line : report.lines) {
    std::vector<bool> paired(line.runs.size(), false);
    for (const auto& disc : line.discontinuities) {
      const double j = disc.jump();
      const double p0 = disc.position;
      const double p1 = disc.position + 1;
      // Partner columns of the two boundary pixels in the other view.
      const double sign = disc.side == Side::Left ? -1.0 : 1.0;
      const double w0 = p0 + sign * disc.d_before;
      const double w1 = p1 + sign * disc.d_after;
      std::optional<Candidate> best;
      // A surface stepping nearer (d grows along the line) hides background
      // from the right eye, leaving pixels seen by the left eye only.
      const Side occluded_view = disc.d_after > disc.d_before ? Side::Left : Side::Right;
      for (std::size_t i = 0; i < line.runs.size(); ++i) {
        const auto& run = line.runs[i];
        if (run.side != occluded_view) continue;
        double a = 0, b = 0, ref_a = 0, ref_b = 0;
        if (run.side == disc.side) {
          a = p0 - j;
          b = p1 + j;
          ref_a = p0;
          ref_b = p1;
        } else {
          a = std::min(w0, w1);
          b = std::max(w0, w1);
          ref_a = a;
          ref_b = b;
        }
        if (interval_gap(run.start, run.end, a, b) > 0.0) continue;
        const double dist = interval_gap(run.start, run.end, ref_a, ref_b);
        const Candidate c{i, dist};
        if (!best || c.distance < best->distance ||
            (c.distance == best->distance && run.width() > line.runs[best->run].width())) {
          best = c;
        }
      }
      if (!best) {
        v.davinci_mismatches.push_back({line.e, disc, std::nullopt, j, 0, j});
        continue;
      }
      paired[best->run] = true;
      const auto& run = line.runs[best->run];
      const double residual = std::abs(j - run.width());
      if (residual > pixel_tol) v.davinci_mismatches.push_back({line.e, disc, run, j, run.width(), residual});
    }
    for (std::size_t i = 0; i < line.runs.size(); ++i) {
      const auto& run = line.runs[i];
      if (paired[i] || run.width() <= report.params.jump_threshold) continue;
      v.davinci_mismatches.push_back(
          {line.e, std::nullopt, run, 0.0, run.width(), static_cast<double>(run.width())});
    }
  }
  return v;
}

double cyclopean_gap_width(const CyclopeanSurface& surface, const Discontinuity& disc) {
  const double sign = disc.side == Side::Left ? -0.5 : 0.5;
  const double x0 = disc.position + sign * disc.d_before;
  const double x1 = disc.position + 1 + sign * disc.d_after;
  const int k_lo = std::clamp(nearest_half_index(2.0 * std::min(x0, x1)), 0, surface.half_width() - 1);
  const int k_hi = std::clamp(nearest_half_index(2.0 * std::max(x0, x1)), 0, surface.half_width() - 1);
  auto seen = [&](int k) {
    const auto kind = surface.cell(k).kind;
    return kind == CellKind::Matched || kind == CellKind::MultiLayer;
  };
  int a = k_lo;
  while (a >= 0 && !seen(a)) --a;
  int b = k_hi;
  while (b < surface.half_width() && !seen(b)) ++b;
  if (a < 0 || b >= surface.half_width()) {
    // Only one surface present: fall back to the boundary geometry itself.
    a = k_lo;
    b = k_hi;
  }
  return std::max(0.0, 0.5 * (b - a) - 1.0);
}

// Ambiguity detectors -----------------------------------------------------

std::vector<bool> homogeneity_mask(const CostSlice& slice, double spread_threshold) {
  std::vector<bool> mask(static_cast<std::size_t>(slice.half_width()), false);
  for (int k = 0; k < slice.half_width(); ++k) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    int count = 0;
    for (int d = slice.d_min(); d <= slice.d_max(); ++d) {
      if (!slice.valid(k, d)) continue;
      lo = std::min(lo, slice.fm(k, d));
      hi = std::max(hi, slice.fm(k, d));
      ++count;
    }
    if (count >= 2 && hi - lo < spread_threshold) mask[static_cast<std::size_t>(k)] = true;
  }
  return mask;
}

ModeMap multimodality_map(const CostSlice& slice, double rel_threshold, int min_separation) {
  ModeMap out;
  out.counts.assign(static_cast<std::size_t>(slice.half_width()), 0);
  out.modes.resize(static_cast<std::size_t>(slice.half_width()));
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (int k = 0; k < slice.half_width(); ++k) {
    auto cost = [&](int d) { return slice.valid(k, d) ? slice.fm(k, d) : inf; };
    double lo = inf;
    double hi = -inf;
    for (int d = slice.d_min(); d <= slice.d_max(); ++d) {
      if (!slice.valid(k, d)) continue;
      lo = std::min(lo, cost(d));
      hi = std::max(hi, cost(d));
    }
    if (!(lo <= hi)) continue;
    const double accept = lo + rel_threshold * (hi - lo);
    // Local minima over runs of equal cost; a run is represented by its
    // lowest d.
    std::vector<std::pair<double, int>> minima;
    int d = slice.d_min();
    while (d <= slice.d_max()) {
      const double c = cost(d);
      int end = d;
      while (end + 1 <= slice.d_max() && cost(end + 1) == c) ++end;
      if (c != inf && c <= accept && c < cost(d - 1) && c < cost(end + 1)) minima.emplace_back(c, d);
      d = end + 1;
    }
    std::sort(minima.begin(), minima.end());
    auto& kept = out.modes[static_cast<std::size_t>(k)];
    for (const auto& [c, dm] : minima) {
      const bool apart =
          std::all_of(kept.begin(), kept.end(), [&](int m) { return std::abs(m - dm) >= min_separation; });
      if (apart) kept.push_back(dm);
    }
    std::sort(kept.begin(), kept.end());
    out.counts[static_cast<std::size_t>(k)] = static_cast<int>(kept.size());
  }
  return out;
}

}  // namespace cyclops

#include "cyclops/reports.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cyclops/error.hpp"

namespace cyclops {

Metrics eval_metrics(const DisparityMap& pred, const DisparityMap& gt, std::span<const double> thresholds) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw Error(ErrorCode::DimensionMismatch, "prediction and GT differ in size");
  }
  if (pred.view != gt.view) throw Error(ErrorCode::DimensionMismatch, "prediction and GT differ in view");
  Metrics m;
  m.thresholds.assign(thresholds.begin(), thresholds.end());
  std::vector<std::size_t> bad(thresholds.size(), 0);
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      ++m.total_pixels;
      const double g = gt.values(x, y);
      if (!is_known(g)) continue;
      ++m.gt_pixels;
      const double p = pred.values(x, y);
      if (!is_known(p)) {
        for (auto& b : bad) ++b;
        continue;
      }
      ++m.evaluated;
      const double err = std::abs(p - g);
      abs_sum += err;
      sq_sum += err * err;
      for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (err > thresholds[i]) ++bad[i];
      }
    }
  }
  for (auto b : bad) m.bad.push_back(m.gt_pixels ? double(b) / double(m.gt_pixels) : 0.0);
  if (m.evaluated) {
    m.mean_abs_error = abs_sum / double(m.evaluated);
    m.rms_error = std::sqrt(sq_sum / double(m.evaluated));
  }
  m.coverage = m.total_pixels ? double(m.evaluated) / double(m.total_pixels) : 0.0;
  return m;
}

namespace {

BiasStats summarize(const Grid<double>& ratio, int bins) {
  BiasStats s;
  double sum = 0.0;
  s.min = std::numeric_limits<double>::infinity();
  s.max = -s.min;
  for (int y = 0; y < ratio.height(); ++y) {
    for (int x = 0; x < ratio.width(); ++x) {
      const double v = ratio(x, y);
      if (!is_known(v)) continue;
      ++s.count;
      sum += v;
      if (v < s.min) {
        s.min = v;
        s.argmin = {x, y};
      }
      if (v > s.max) {
        s.max = v;
        s.argmax = {x, y};
      }
    }
  }
  if (s.count == 0) {
    s.min = s.max = 0.0;
    return s;
  }
  s.mean = sum / double(s.count);
  s.histogram.lo = s.min;
  s.histogram.hi = s.max;
  s.histogram.counts.assign(static_cast<std::size_t>(bins), 0);
  const double span = s.max - s.min;
  for (double v : ratio.data()) {
    if (!is_known(v)) continue;
    int b = span > 0.0 ? static_cast<int>((v - s.min) / span * bins) : 0;
    b = std::clamp(b, 0, bins - 1);
    ++s.histogram.counts[static_cast<std::size_t>(b)];
  }
  return s;
}

}  // namespace

BiasReport compute_bias(const DisparityMap& gt_left, const CameraRig& rig, int bins) {
  rig.validate();
  if (bins < 1) throw Error(ErrorCode::InvalidArgument, "histogram needs at least one bin");
  BiasReport rep{Grid<double>(gt_left.width(), gt_left.height(), kUnknownDisparity),
                 Grid<double>(gt_left.width(), gt_left.height(), kUnknownDisparity),
                 {}, {}, 0, 0.0, 0.0};
  const double half_b = 0.5 * rig.baseline;
  for (int y = 0; y < gt_left.height(); ++y) {
    for (int l = 0; l < gt_left.width(); ++l) {
      const double d = gt_left.values(l, y);
      if (!is_known(d) || d + rig.doffs <= 0.0) {
        ++rep.skipped;
        continue;
      }
      const double z = disparity_to_depth(rig, d);
      // Lateral offset measured towards the left eye.
      const double lateral = -lateral_offset(rig, l - 0.5 * d, z);
      const EyeDepths eyes = eye_depths(rig, lateral, z);
      rep.left_ratio(l, y) = (eyes.left - z) / z;
      rep.right_ratio(l, y) = (eyes.right - z) / z;
      const double z2 = z * z;
      const double res_l = std::abs((eyes.left * eyes.left - z2) - (half_b - lateral) * (half_b - lateral)) / z2;
      const double res_r = std::abs((eyes.right * eyes.right - z2) - (half_b + lateral) * (half_b + lateral)) / z2;
      rep.max_residual_left = std::max(rep.max_residual_left, res_l);
      rep.max_residual_right = std::max(rep.max_residual_right, res_r);
    }
  }
  rep.left = summarize(rep.left_ratio, bins);
  rep.right = summarize(rep.right_ratio, bins);
  return rep;
}

namespace {

Rgb gray(double fm) {
  const auto g = quantize_unit(fm);
  return {g, g, g};
}

void mark(RgbImage& img, int x, int y, const Rgb& c) {
  if (img.contains(x, y)) img(x, y) = c;
}

}  // namespace

RgbImage render_lr_slice(const CostSlice& slice, const SliceOverlay& overlay) {
  const int n = slice.width();
  const LrMatrix lr = slice_as_lr_matrix(slice);
  RgbImage img(n, n, kInvalidColor);
  for (int l = 0; l < n; ++l) {
    for (int r = 0; r < n; ++r) {
      if (lr.valid(l, r)) img(r, l) = gray(lr.at(l, r));
    }
  }
  // Occlusion runs: a left run spans rows, a right run spans columns; both
  // are drawn along the image border of the matrix they belong to.
  for (const auto& run : overlay.runs) {
    for (int p = run.start; p < run.end; ++p) {
      if (run.side == Side::Left) {
        mark(img, 0, p, kRunColor);
        mark(img, 1, p, kRunColor);
      } else {
        mark(img, p, n - 1, kRunColor);
        mark(img, p, n - 2, kRunColor);
      }
    }
  }
  for (const auto& disc : overlay.discontinuities) {
    const int p = disc.position;
    if (disc.side == Side::Left) {
      mark(img, n - 1, p, kDiscColor);
      mark(img, n - 2, p, kDiscColor);
    } else {
      mark(img, p, 0, kDiscColor);
      mark(img, p, 1, kDiscColor);
    }
  }
  auto draw_row = [&](const std::vector<double>& row, int sign) {
    for (int p = 0; p < static_cast<int>(row.size()); ++p) {
      const double d = row[static_cast<std::size_t>(p)];
      if (!is_known(d)) continue;
      const long q = std::lround(p + sign * d);
      if (sign < 0) {
        mark(img, static_cast<int>(q), p, kGtColor);
      } else {
        mark(img, p, static_cast<int>(q), kGtColor);
      }
    }
  };
  if (overlay.gt_left) draw_row(*overlay.gt_left, -1);
  if (overlay.gt_right) draw_row(*overlay.gt_right, +1);
  if (overlay.path) {
    for (int k = 0; k < overlay.path->half_width(); ++k) {
      const auto& s = overlay.path->steps[static_cast<std::size_t>(k)];
      if (s.state != StepState::Match || (k + s.d) % 2 != 0) continue;
      mark(img, (k - s.d) / 2, (k + s.d) / 2, kPathColor);
    }
  }
  return img;
}

RgbImage render_xd_slice(const CostSlice& slice, const ScanlinePath* path) {
  RgbImage img(slice.half_width(), slice.num_disparities(), kInvalidColor);
  for (int d = slice.d_min(); d <= slice.d_max(); ++d) {
    for (int k = 0; k < slice.half_width(); ++k) {
      if (slice.valid(k, d)) img(k, d - slice.d_min()) = gray(slice.fm(k, d));
    }
  }
  if (path) {
    for (int k = 0; k < std::min(path->half_width(), slice.half_width()); ++k) {
      const auto& s = path->steps[static_cast<std::size_t>(k)];
      if (s.boundary) continue;
      mark(img, k, s.d - slice.d_min(), s.state == StepState::Match ? kPathColor : kRunColor);
    }
  }
  return img;
}

Grid<std::uint8_t> render_labels(const Grid<std::uint8_t>& labels) {
  Grid<std::uint8_t> out(labels.width(), labels.height(), 0);
  for (int y = 0; y < labels.height(); ++y) {
    for (int x = 0; x < labels.width(); ++x) {
      std::uint8_t g = 0;
      switch (static_cast<CellLabel>(labels(x, y))) {
        case CellLabel::Unknown: g = 0; break;
        case CellLabel::Match: g = 255; break;
        case CellLabel::LOcc: g = 96; break;
        case CellLabel::ROcc: g = 160; break;
        case CellLabel::Filled: g = 208; break;
      }
      out(x, y) = g;
    }
  }
  return out;
}

}  // namespace cyclops

#include "cyclops/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "cyclops/error.hpp"
#include "cyclops/parallel.hpp"

namespace cyclops {

const char* to_string(StepState s) {
  switch (s) {
    case StepState::Match: return "match";
    case StepState::LOcc: return "l_occ";
    case StepState::ROcc: return "r_occ";
  }
  return "unknown";
}

const char* to_string(TieBreak t) { return t == TieBreak::PreferFar ? "far" : "near"; }

TieBreak tie_break_from_string(const std::string& s) {
  if (s == "far") return TieBreak::PreferFar;
  if (s == "near") return TieBreak::PreferNear;
  throw Error(ErrorCode::InvalidArgument, "tie break must be 'far' or 'near', got '" + s + "'");
}

const char* to_string(CellLabel l) {
  switch (l) {
    case CellLabel::Unknown: return "unknown";
    case CellLabel::Match: return "match";
    case CellLabel::LOcc: return "l_occ";
    case CellLabel::ROcc: return "r_occ";
    case CellLabel::Filled: return "filled";
  }
  return "unknown";
}

void SolverParams::validate() const {
  if (!(occlusion_penalty > 0.0) || !std::isfinite(occlusion_penalty)) {
    throw Error(ErrorCode::InvalidArgument, "occlusion penalty must be positive");
  }
  if (continuity_band < 0) throw Error(ErrorCode::InvalidArgument, "continuity band must be >= 0");
  if (homogeneity_threshold < 0.0) throw Error(ErrorCode::InvalidArgument, "homogeneity threshold must be >= 0");
}

std::size_t ScanlinePath::occluded_count() const {
  return static_cast<std::size_t>(
      std::count_if(steps.begin(), steps.end(), [](const PathStep& s) { return s.state != StepState::Match; }));
}

namespace {

// Lexicographic objective: energy, then disparity preference, then position
// of the occluded cells. The energy is kept as its two parts so that paths
// with the same matched costs and occlusion count tie exactly.
struct Key {
  double fm = std::numeric_limits<double>::infinity();
  std::int64_t occluded = 0;
  std::int64_t depth = 0;
  std::int64_t place = 0;

  bool finite() const { return fm != std::numeric_limits<double>::infinity(); }
  double cost(double kappa) const { return fm + kappa * static_cast<double>(occluded); }
};

struct Order {
  double kappa;
  bool operator()(const Key& a, const Key& b) const {
    const double ca = a.cost(kappa);
    const double cb = b.cost(kappa);
    if (ca != cb) return ca < cb;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.place < b.place;
  }
};

struct Increment {
  double fm;
  std::int64_t occluded;
  std::int64_t depth;
  std::int64_t place;
};

Increment increment(const CostSlice& slice, const SolverParams& p, int k, const PathStep& s) {
  const std::int64_t sign = p.tie_break == TieBreak::PreferFar ? 1 : -1;
  if (s.state == StepState::Match) return {slice.fm(k, s.d), 0, sign * s.d, 0};
  if (s.boundary) return {0.0, 1, 0, 0};
  return {0.0, 1, sign * s.d, k};
}

Key add(const Key& a, const Increment& i) {
  return {a.fm + i.fm, a.occluded + i.occluded, a.depth + i.depth, a.place + i.place};
}

constexpr Key kStart{0.0, 0, 0, 0};

void check_slice(const CostSlice& slice, const SolverParams& params) {
  params.validate();
  if (slice.valid_count() == 0) {
    throw Error(ErrorCode::DegenerateSlice, "slice for line " + std::to_string(slice.line()) + " has no valid cells");
  }
}

// Whether `next` may follow `prev` on adjacent cells. prev == nullptr means
// `next` is the first cell.
bool legal_transition(const PathStep* prev, const PathStep& next, int band) {
  if (!prev) return next.state == StepState::Match || (next.state == StepState::LOcc && next.boundary);
  const PathStep& a = *prev;
  if (a.state == StepState::LOcc && a.boundary) {
    return (next.state == StepState::LOcc && next.boundary) || next.state == StepState::Match;
  }
  if (a.state == StepState::ROcc && a.boundary) return next.state == StepState::ROcc && next.boundary;
  switch (next.state) {
    case StepState::Match:
      if (a.state == StepState::Match) return std::abs(next.d - a.d) <= band;
      return next.d == a.d;
    case StepState::LOcc:
      if (next.boundary) return false;
      return a.state != StepState::ROcc && next.d == a.d + 1;
    case StepState::ROcc:
      if (next.boundary) return a.state == StepState::Match;
      return a.state != StepState::LOcc && next.d == a.d - 1;
  }
  return false;
}

bool cell_allowed(const CostSlice& slice, int k, const PathStep& s) {
  if (s.state == StepState::Match) return slice.valid(k, s.d);
  if (s.boundary) return true;
  return s.d >= slice.d_min() && s.d <= slice.d_max();
}

bool legal_last(const PathStep& s) {
  return s.state == StepState::Match || (s.state == StepState::ROcc && s.boundary);
}

}  // namespace

// Dynamic program ----------------------------------------------------------

ScanlinePath solve_scanline(const CostSlice& slice, const SolverParams& params) {
  check_slice(slice, params);
  const int n2 = slice.half_width();
  const int dn = slice.num_disparities();
  const int dmin = slice.d_min();
  // State layout: 0 border-L, 1 border-R, then Match, LOcc, ROcc blocks.
  const int kBL = 0;
  const int kBR = 1;
  auto sm = [&](int d) { return 2 + (d - dmin); };
  auto slo = [&](int d) { return 2 + dn + (d - dmin); };
  auto sro = [&](int d) { return 2 + 2 * dn + (d - dmin); };
  const int states = 2 + 3 * dn;
  const Order less{params.occlusion_penalty};

  auto step_of = [&](int s) -> PathStep {
    if (s == kBL) return {StepState::LOcc, 0, true};
    if (s == kBR) return {StepState::ROcc, 0, true};
    const int block = (s - 2) / dn;
    const int d = dmin + (s - 2) % dn;
    return {block == 0 ? StepState::Match : block == 1 ? StepState::LOcc : StepState::ROcc, d, false};
  };

  std::vector<Key> prev(static_cast<std::size_t>(states));
  std::vector<Key> cur(static_cast<std::size_t>(states));
  std::vector<std::int32_t> pred(static_cast<std::size_t>(n2) * static_cast<std::size_t>(states), -1);
  auto pred_at = [&](int k, int s) -> std::int32_t& {
    return pred[static_cast<std::size_t>(k) * static_cast<std::size_t>(states) + static_cast<std::size_t>(s)];
  };

  for (int k = 0; k < n2; ++k) {
    std::fill(cur.begin(), cur.end(), Key{});
    auto relax = [&](int s, int from, const Increment& inc) {
      const Key base = from < 0 ? kStart : prev[static_cast<std::size_t>(from)];
      if (!base.finite()) return;
      const Key cand = add(base, inc);
      if (less(cand, cur[static_cast<std::size_t>(s)])) {
        cur[static_cast<std::size_t>(s)] = cand;
        pred_at(k, s) = from;
      }
    };

    // Border prefix.
    {
      const Increment inc = increment(slice, params, k, step_of(kBL));
      relax(kBL, k == 0 ? -1 : kBL, inc);
    }
    for (int d = dmin; d <= slice.d_max(); ++d) {
      if (slice.valid(k, d)) {
        const Increment inc = increment(slice, params, k, {StepState::Match, d, false});
        if (k == 0) {
          relax(sm(d), -1, inc);
        } else {
          relax(sm(d), kBL, inc);
          for (int dp = std::max(dmin, d - params.continuity_band);
               dp <= std::min(slice.d_max(), d + params.continuity_band); ++dp) {
            relax(sm(d), sm(dp), inc);
          }
          relax(sm(d), slo(d), inc);
          relax(sm(d), sro(d), inc);
        }
      }
      if (k == 0) continue;
      const Increment occ = increment(slice, params, k, {StepState::LOcc, d, false});
      if (d - 1 >= dmin) {
        relax(slo(d), sm(d - 1), occ);
        relax(slo(d), slo(d - 1), occ);
      }
      if (d + 1 <= slice.d_max()) {
        relax(sro(d), sm(d + 1), occ);
        relax(sro(d), sro(d + 1), occ);
      }
    }
    if (k > 0) {
      const Increment inc = increment(slice, params, k, step_of(kBR));
      for (int d = dmin; d <= slice.d_max(); ++d) relax(kBR, sm(d), inc);
      relax(kBR, kBR, inc);
    }
    std::swap(prev, cur);
  }

  int best = -1;
  Key best_key;
  for (int d = dmin; d <= slice.d_max(); ++d) {
    if (less(prev[static_cast<std::size_t>(sm(d))], best_key)) {
      best_key = prev[static_cast<std::size_t>(sm(d))];
      best = sm(d);
    }
  }
  if (less(prev[kBR], best_key)) {
    best_key = prev[kBR];
    best = kBR;
  }
  if (best < 0) {
    throw Error(ErrorCode::DegenerateSlice, "no legal path for line " + std::to_string(slice.line()));
  }

  ScanlinePath path;
  path.e = slice.line();
  path.total_cost = best_key.cost(params.occlusion_penalty);
  path.steps.resize(static_cast<std::size_t>(n2));
  int s = best;
  for (int k = n2 - 1; k >= 0; --k) {
    path.steps[static_cast<std::size_t>(k)] = step_of(s);
    s = pred_at(k, s);
  }
  return path;
}

// Exhaustive oracle ----------------------------------------------------------

namespace {

class BruteForce {
 public:
  BruteForce(const CostSlice& slice, const SolverParams& params) : slice_(slice), params_(params) {
    for (int d = slice.d_min(); d <= slice.d_max(); ++d) {
      options_.push_back({StepState::Match, d, false});
      options_.push_back({StepState::LOcc, d, false});
      options_.push_back({StepState::ROcc, d, false});
    }
    options_.push_back({StepState::LOcc, 0, true});
    options_.push_back({StepState::ROcc, 0, true});
    current_.resize(static_cast<std::size_t>(slice.half_width()));
  }

  std::optional<ScanlinePath> run() {
    visit(0, kStart);
    if (!found_) return std::nullopt;
    return ScanlinePath{slice_.line(), best_steps_, best_.cost(params_.occlusion_penalty)};
  }

 private:
  void visit(int k, const Key& acc) {
    const int n2 = slice_.half_width();
    if (k == n2) {
      if (legal_last(current_.back()) && (!found_ || Order{params_.occlusion_penalty}(acc, best_))) {
        found_ = true;
        best_ = acc;
        best_steps_ = current_;
      }
      return;
    }
    // Every increment is non-negative, so a prefix already dearer than the
    // best complete path cannot win.
    if (found_ && acc.cost(params_.occlusion_penalty) > best_.cost(params_.occlusion_penalty)) return;
    const PathStep* prev = k == 0 ? nullptr : &current_[static_cast<std::size_t>(k - 1)];
    for (const auto& opt : options_) {
      if (!legal_transition(prev, opt, params_.continuity_band) || !cell_allowed(slice_, k, opt)) continue;
      current_[static_cast<std::size_t>(k)] = opt;
      visit(k + 1, add(acc, increment(slice_, params_, k, opt)));
    }
  }

  const CostSlice& slice_;
  const SolverParams& params_;
  std::vector<PathStep> options_;
  std::vector<PathStep> current_;
  std::vector<PathStep> best_steps_;
  Key best_;
  bool found_ = false;
};

}  // namespace

ScanlinePath brute_force_scanline(const CostSlice& slice, const SolverParams& params) {
  if (slice.width() > kBruteForceMaxWidth || slice.d_max() - slice.d_min() > kBruteForceMaxRange) {
    throw Error(ErrorCode::InstanceTooLarge, "brute force is limited to width <= " +
                                                 std::to_string(kBruteForceMaxWidth) + " and d range <= " +
                                                 std::to_string(kBruteForceMaxRange));
  }
  check_slice(slice, params);
  auto best = BruteForce(slice, params).run();
  if (!best) throw Error(ErrorCode::DegenerateSlice, "no legal path for line " + std::to_string(slice.line()));
  return *best;
}

double path_cost(const CostSlice& slice, const ScanlinePath& path, const SolverParams& params) {
  Key key = kStart;
  for (int k = 0; k < path.half_width(); ++k) {
    key = add(key, increment(slice, params, k, path.steps[static_cast<std::size_t>(k)]));
  }
  return key.cost(params.occlusion_penalty);
}

std::optional<std::string> path_violation(const CostSlice& slice, const ScanlinePath& path,
                                          const SolverParams& params) {
  if (path.half_width() != slice.half_width()) return "path length differs from the slice half grid";
  bool matched = false;
  for (int k = 0; k < path.half_width(); ++k) {
    const auto& s = path.steps[static_cast<std::size_t>(k)];
    const PathStep* prev = k == 0 ? nullptr : &path.steps[static_cast<std::size_t>(k - 1)];
    if (!legal_transition(prev, s, params.continuity_band)) return "illegal transition at k=" + std::to_string(k);
    if (!cell_allowed(slice, k, s)) return "cell not allowed at k=" + std::to_string(k);
    matched = matched || s.state == StepState::Match;
  }
  if (!matched) return "path has no matched cell";
  if (!legal_last(path.steps.back())) return "path ends inside a jump";
  return std::nullopt;
}

// Filling and outputs ------------------------------------------------------

namespace {

// Every cell with a choice of disparity is flagged homogeneous. Cells at the
// line ends with a single candidate carry no evidence either way.
bool homogeneous_line(const CostSlice& slice, double threshold) {
  const auto mask = homogeneity_mask(slice, threshold);
  bool any = false;
  for (int k = 0; k < slice.half_width(); ++k) {
    int count = 0;
    for (int d = slice.d_min(); d <= slice.d_max() && count < 2; ++d) count += slice.valid(k, d) ? 1 : 0;
    if (count < 2) continue;
    if (!mask[static_cast<std::size_t>(k)]) return false;
    any = true;
  }
  return any;
}

}  // namespace

std::vector<double> fill_occlusions(const ScanlinePath& path) {
  const int n2 = path.half_width();
  std::vector<double> out(static_cast<std::size_t>(n2), kUnknownDisparity);
  int k = 0;
  int last_match = -1;
  while (k < n2) {
    const auto& s = path.steps[static_cast<std::size_t>(k)];
    if (s.state == StepState::Match) {
      out[static_cast<std::size_t>(k)] = s.d;
      last_match = k;
      ++k;
      continue;
    }
    int end = k;
    while (end < n2 && path.steps[static_cast<std::size_t>(end)].state != StepState::Match) ++end;
    const std::optional<double> before =
        last_match >= 0 ? std::optional<double>(path.steps[static_cast<std::size_t>(last_match)].d) : std::nullopt;
    const std::optional<double> after =
        end < n2 ? std::optional<double>(path.steps[static_cast<std::size_t>(end)].d) : std::nullopt;
    double fill = kUnknownDisparity;
    if (before && after) {
      fill = std::min(*before, *after);
    } else if (before) {
      fill = *before;
    } else if (after) {
      fill = *after;
    }
    for (int i = k; i < end; ++i) out[static_cast<std::size_t>(i)] = fill;
    k = end;
  }
  return out;
}

SolvedImage solve_image(std::span<const std::optional<CostSlice>> slices, int width, const SolverParams& params) {
  params.validate();
  const int h = static_cast<int>(slices.size());
  SolvedImage out{DisparityMap{View::Cyclopean, Grid<double>(2 * width, h, kUnknownDisparity)},
                  Grid<std::uint8_t>(2 * width, h, static_cast<std::uint8_t>(CellLabel::Unknown)),
                  std::vector<std::optional<ScanlinePath>>(static_cast<std::size_t>(h)),
                  {}};

  parallel_for(h, [&](int e) {
    const auto& slice = slices[static_cast<std::size_t>(e)];
    if (!slice || slice->half_width() != 2 * width) return;
    if (params.homogeneity_threshold > 0.0 && homogeneous_line(*slice, params.homogeneity_threshold)) return;
    try {
      out.paths[static_cast<std::size_t>(e)] = solve_scanline(*slice, params);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::DegenerateSlice) throw;
    }
  });

  for (int e = 0; e < h; ++e) {
    const auto& path = out.paths[static_cast<std::size_t>(e)];
    if (!path) {
      out.unknown_lines.push_back(e);
      continue;
    }
    const auto dense = fill_occlusions(*path);
    for (int k = 0; k < 2 * width; ++k) {
      const auto& s = path->steps[static_cast<std::size_t>(k)];
      out.disparity.values(k, e) = dense[static_cast<std::size_t>(k)];
      CellLabel label = CellLabel::Match;
      if (s.boundary) {
        label = CellLabel::Filled;
      } else if (s.state == StepState::LOcc) {
        label = CellLabel::LOcc;
      } else if (s.state == StepState::ROcc) {
        label = CellLabel::ROcc;
      }
      out.labels(k, e) = static_cast<std::uint8_t>(label);
    }
  }
  return out;
}

CyclopeanSurface path_to_surface(const ScanlinePath& path, int width) {
  CyclopeanSurface surface(path.e, width);
  for (int k = 0; k < std::min(path.half_width(), surface.half_width()); ++k) {
    const auto& s = path.steps[static_cast<std::size_t>(k)];
    auto& cell = surface.cell(k);
    switch (s.state) {
      case StepState::Match: cell.kind = CellKind::Matched; break;
      case StepState::LOcc: cell.kind = CellKind::LOccluded; break;
      case StepState::ROcc: cell.kind = CellKind::ROccluded; break;
    }
    if (!s.boundary) cell.disparities = {static_cast<double>(s.d)};
  }
  return surface;
}

ImpliedMaps implied_lr(const ScanlinePath& path, int width) {
  ImpliedMaps maps{std::vector<double>(static_cast<std::size_t>(width), kUnknownDisparity),
                   std::vector<double>(static_cast<std::size_t>(width), kUnknownDisparity)};
  auto put = [&](std::vector<double>& row, int twice, double d) {
    if (twice % 2 != 0) return;
    const int p = twice / 2;
    if (p >= 0 && p < width && !is_known(row[static_cast<std::size_t>(p)])) row[static_cast<std::size_t>(p)] = d;
  };
  const PathStep* prev = nullptr;
  for (int k = 0; k < path.half_width(); ++k) {
    const auto& s = path.steps[static_cast<std::size_t>(k)];
    if (s.state != StepState::Match) {
      prev = nullptr;
      continue;
    }
    const int l2 = k + s.d;
    const int r2 = k - s.d;
    put(maps.left, l2, s.d);
    put(maps.right, r2, s.d);
    // A slanted step between two half-pixel matches passes over a pixel.
    if (prev) {
      const int pl2 = k - 1 + prev->d;
      const int pr2 = k - 1 - prev->d;
      const double mid = 0.5 * (s.d + prev->d);
      if (pl2 % 2 != 0 && l2 == pl2 + 2) put(maps.left, pl2 + 1, mid);
      if (pr2 % 2 != 0 && r2 == pr2 + 2) put(maps.right, pr2 + 1, mid);
    }
    prev = &s;
  }
  return maps;
}

}  // namespace cyclops

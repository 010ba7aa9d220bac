#include "cyclops/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cyclops/error.hpp"

namespace cyclops {

const char* to_string(SceneKind k) {
  switch (k) {
    case SceneKind::Step: return "step";
    case SceneKind::ThinPole: return "thin_pole";
    case SceneKind::Repetitive: return "repetitive";
    case SceneKind::HomogeneousBand: return "homogeneous_band";
  }
  return "unknown";
}

SceneKind scene_kind_from_string(const std::string& s) {
  if (s == "step") return SceneKind::Step;
  if (s == "thin_pole" || s == "pole") return SceneKind::ThinPole;
  if (s == "repetitive") return SceneKind::Repetitive;
  if (s == "homogeneous_band" || s == "homogeneous") return SceneKind::HomogeneousBand;
  throw Error(ErrorCode::InvalidArgument, "unknown scene kind '" + s + "'");
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, "scene spec: " + what);
}
constexpr long long kFar = std::numeric_limits<int>::max();


// splitmix64 finaliser; gives random access to the texture at any column.
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double noise(std::uint64_t seed, int layer, long long u, int y) {
  std::uint64_t h = mix(seed);
  h = mix(h ^ static_cast<std::uint64_t>(layer));
  h = mix(h ^ static_cast<std::uint64_t>(u));
  h = mix(h ^ static_cast<std::uint64_t>(y));
  return static_cast<double>(h >> 56) / 255.0;
}

double texture(const SceneSpec& spec, const Layer& layer, long long u, int y) {
  switch (spec.kind) {
    case SceneKind::Repetitive: {
      const long long p = spec.period;
      return noise(spec.seed, layer.id, ((u % p) + p) % p, y);
    }
    case SceneKind::HomogeneousBand:
      if (u >= spec.band_start && u < spec.band_end) return 128.0 / 255.0;
      return noise(spec.seed, layer.id, u, y);
    default: return noise(spec.seed, layer.id, u, y);
  }
}

}  // namespace

void SceneSpec::validate() const {
  require(width >= 8 && height >= 1, "image must be at least 8x1");
  require(background_d >= 0, "background disparity must be >= 0");
  require(ndisp >= 1, "ndisp must be >= 1");
  require(focal_px > 0.0 && baseline > 0.0, "focal length and baseline must be positive");
  require(background_d < width, "background disparity exceeds the image");
  switch (kind) {
    case SceneKind::Step:
      require(background_d <= foreground_d, "background must not be nearer than foreground");
      require(foreground_d <= ndisp, "foreground disparity exceeds ndisp");
      require(edge > foreground_d && edge < width, "edge must lie in (foreground_d, width)");
      break;
    case SceneKind::ThinPole:
      require(background_d < foreground_d, "pole must be nearer than background");
      require(foreground_d <= ndisp, "foreground disparity exceeds ndisp");
      require(pole_width >= 1, "pole width must be >= 1");
      require(pole_position - (foreground_d - background_d) > background_d && pole_position >= foreground_d,
              "pole too close to the left border");
      require(pole_position + pole_width < width, "pole too close to the right border");
      break;
    case SceneKind::Repetitive:
      require(period >= 2, "period must be >= 2");
      require(background_d <= ndisp, "background disparity exceeds ndisp");
      break;
    case SceneKind::HomogeneousBand:
      require(band_start >= 0 && band_start < band_end && band_end <= width, "band must lie inside the image");
      require(background_d <= ndisp, "background disparity exceeds ndisp");
      break;
  }
}

std::vector<Layer> scene_layers(const SceneSpec& spec) {
  std::vector<Layer> layers{{-kFar, kFar, spec.background_d, 0}};
  if (spec.kind == SceneKind::Step && spec.foreground_d != spec.background_d) {
    layers.push_back({spec.edge, kFar, spec.foreground_d, 1});
  } else if (spec.kind == SceneKind::Step) {
    // Equal disparities: one plane whose texture still changes at the edge.
    layers.push_back({spec.edge, kFar, spec.foreground_d, 1});
  } else if (spec.kind == SceneKind::ThinPole) {
    layers.push_back({spec.pole_position, spec.pole_position + spec.pole_width, spec.foreground_d, 1});
  }
  return layers;
}

int front_layer_left(const std::vector<Layer>& layers, int l) {
  int best = -1;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& ly = layers[i];
    if (l >= ly.u0 && l < ly.u1 && (best < 0 || ly.d >= layers[static_cast<std::size_t>(best)].d)) {
      best = static_cast<int>(i);
    }
  }
  return best;
}

int front_layer_right(const std::vector<Layer>& layers, int r) {
  int best = -1;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& ly = layers[i];
    const long long u = static_cast<long long>(r) + ly.d;
    if (u >= ly.u0 && u < ly.u1 && (best < 0 || ly.d >= layers[static_cast<std::size_t>(best)].d)) {
      best = static_cast<int>(i);
    }
  }
  return best;
}

GeneratedScene generate(const SceneSpec& spec, const OcclusionParams& params) {
  spec.validate();
  const int n = spec.width;
  const auto layers = scene_layers(spec);

  ScenePair pair;
  pair.name = to_string(spec.kind);
  pair.left_image = Image(n, spec.height, 0.0);
  pair.right_image = Image(n, spec.height, 0.0);
  Grid<double> gl(n, spec.height, kUnknownDisparity);
  Grid<double> gr(n, spec.height, kUnknownDisparity);

  for (int y = 0; y < spec.height; ++y) {
    for (int l = 0; l < n; ++l) {
      const auto& ly = layers[static_cast<std::size_t>(front_layer_left(layers, l))];
      pair.left_image(l, y) = texture(spec, ly, l, y);
      const int r = l - ly.d;
      // Out-of-frame partners keep their disparity; pixels hidden from the
      // other eye are unknown.
      if (r < 0 || r >= n || front_layer_right(layers, r) == ly.id) gl(l, y) = ly.d;
    }
    for (int r = 0; r < n; ++r) {
      const auto& ly = layers[static_cast<std::size_t>(front_layer_right(layers, r))];
      const long long u = static_cast<long long>(r) + ly.d;
      pair.right_image(r, y) = texture(spec, ly, u, y);
      if (u < 0 || u >= n || front_layer_left(layers, static_cast<int>(u)) == ly.id) gr(r, y) = ly.d;
    }
  }
  pair.gt_left = DisparityMap{View::Left, std::move(gl)};
  pair.gt_right = DisparityMap{View::Right, std::move(gr)};

  CameraRig& rig = pair.rig;
  rig.focal_px = spec.focal_px;
  rig.baseline = spec.baseline;
  rig.doffs = 0.0;
  rig.cx = 0.5 * (n - 1);
  rig.cy = 0.5 * (spec.height - 1);
  rig.width = n;
  rig.height = spec.height;
  rig.ndisp = spec.ndisp;
  rig.validate();

  return {std::move(pair), annotations(spec, params)};
}

OcclusionReport annotations(const SceneSpec& spec, const OcclusionParams& params) {
  spec.validate();
  const int n = spec.width;
  const int bg = spec.background_d;
  const int fg = spec.foreground_d;
  const int j = fg - bg;

  LineOcclusions line;
  if (bg > 0) line.frame_runs.push_back({0, Side::Left, 0, bg});
  auto disc = [&](Side side, int p, int before, int after) {
    if (std::abs(after - before) > params.jump_threshold) line.discontinuities.push_back({0, side, p, double(before), double(after)});
  };

  if (spec.kind == SceneKind::Step && j > 0) {
    line.runs.push_back({0, Side::Left, spec.edge - j, spec.edge});
    line.frame_runs.push_back({0, Side::Right, n - fg, n});
    disc(Side::Right, spec.edge - fg - 1, bg, fg);
  } else if (spec.kind == SceneKind::ThinPole) {
    const int pos = spec.pole_position;
    const int w = spec.pole_width;
    line.runs.push_back({0, Side::Left, pos - j, std::min(pos + w - j, pos)});
    line.runs.push_back({0, Side::Right, std::max(pos - bg, pos + w - fg), pos + w - bg});
    if (bg > 0) line.frame_runs.push_back({0, Side::Right, n - bg, n});
    if (w < j) disc(Side::Left, pos - 1, bg, fg);
    disc(Side::Left, pos + w - 1, fg, bg);
    disc(Side::Right, pos - fg - 1, bg, fg);
    if (w < j) disc(Side::Right, pos + w - fg - 1, fg, bg);
  } else {
    const int d = spec.kind == SceneKind::Step ? fg : bg;
    if (d > 0) line.frame_runs.push_back({0, Side::Right, n - d, n});
  }
  // Detection lists runs by view (left first) and discontinuities likewise.
  auto by_view = [](const auto& a, const auto& b) {
    return a.side != b.side ? a.side == Side::Left : a.position < b.position;
  };
  std::sort(line.discontinuities.begin(), line.discontinuities.end(), by_view);

  OcclusionReport report;
  report.width = n;
  report.params = params;
  for (int e = 0; e < spec.height; ++e) {
    LineOcclusions copy = line;
    copy.e = e;
    for (auto& r : copy.runs) r.e = e;
    for (auto& r : copy.frame_runs) r.e = e;
    for (auto& d : copy.discontinuities) d.e = e;
    report.lines.push_back(std::move(copy));
  }
  return report;
}

CostSlice visibility_cost_slice(const SceneSpec& spec, int e) {
  spec.validate();
  const int n = spec.width;
  const auto layers = scene_layers(spec);
  // A pixel pair (l, r) sees one surface point when both fronts are the same
  // layer at disparity l - r.
  auto same_point = [&](int l, int r) {
    if (l < 0 || l >= n || r < 0 || r >= n) return false;
    const int a = front_layer_left(layers, l);
    return a == front_layer_right(layers, r) && layers[static_cast<std::size_t>(a)].d == l - r;
  };
  CostSlice slice(e, n, 0, spec.ndisp);
  for (int k = 0; k < 2 * n; ++k) {
    for (int d = 0; d <= spec.ndisp; ++d) {
      const int l2 = k + d;
      const int r2 = k - d;
      if (l2 < 0 || r2 < 0 || l2 > 2 * (n - 1) || r2 > 2 * (n - 1)) continue;
      bool good = false;
      if (l2 % 2 == 0) {
        good = same_point(l2 / 2, r2 / 2);
      } else {
        // A half-pixel sample lies on the footprint edge of both neighbouring
        // pixels; it sees the surface if either neighbour pair does.
        good = same_point((l2 - 1) / 2, (r2 - 1) / 2) || same_point((l2 + 1) / 2, (r2 + 1) / 2);
      }
      const double fm = good ? 0.0 : 1.0;
      slice.set(k, d, 1.0 - fm, fm);
    }
  }
  return slice;
}

}  // namespace cyclops

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cyclops/constraints.hpp"
#include "cyclops/features.hpp"
#include "cyclops/middlebury_io.hpp"

namespace cyclops {

enum class SceneKind { Step, ThinPole, Repetitive, HomogeneousBand };

const char* to_string(SceneKind k);
SceneKind scene_kind_from_string(const std::string& s);

/// Analytic scene. Geometry is given in left-image columns; disparities are
/// integers and nearer layers have larger d.
struct SceneSpec {
  SceneKind kind = SceneKind::Step;
  int width = 128;
  int height = 32;
  int background_d = 4;
  int foreground_d = 10;
  int edge = 40;          // Step: first foreground column
  int pole_position = 60;  // ThinPole: first pole column
  int pole_width = 3;
  int period = 8;          // Repetitive
  int band_start = 32;     // HomogeneousBand: [band_start, band_end)
  int band_end = 96;
  std::uint64_t seed = 1;
  int ndisp = 16;
  double focal_px = 1000.0;
  double baseline = 100.0;

  /// Throws InvalidArgument when the geometry leaves the image or the
  /// closed-form annotations would not hold.
  void validate() const;
};

/// A fronto-parallel textured strip of the scene, in left-image columns.
struct Layer {
  long long u0 = 0;
  long long u1 = 0;  // exclusive
  int d = 0;
  int id = 0;
};

std::vector<Layer> scene_layers(const SceneSpec& spec);

/// Index into `layers` of the front-most layer seen at a column, or -1.
int front_layer_left(const std::vector<Layer>& layers, int l);
int front_layer_right(const std::vector<Layer>& layers, int r);

struct GeneratedScene {
  ScenePair pair;
  OcclusionReport annotations;
};

GeneratedScene generate(const SceneSpec& spec, const OcclusionParams& params = {1.0, 1.0});

/// Closed-form occlusion runs, frame runs and discontinuities; identical on
/// every line.
OcclusionReport annotations(const SceneSpec& spec, const OcclusionParams& params = {1.0, 1.0});

/// Ideal matching costs of one line from scene visibility: 0 where the
/// cyclopean sample sees the same surface point in both eyes, 1 elsewhere.
/// A half-pixel sample counts as seen when either neighbouring pixel pair
/// is. Covers d in [0, ndisp].
CostSlice visibility_cost_slice(const SceneSpec& spec, int e);

}  // namespace cyclops

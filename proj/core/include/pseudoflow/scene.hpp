#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pseudoflow/flow_field.hpp"
#include "pseudoflow/image_io.hpp"
#include "pseudoflow/labels.hpp"
#include "pseudoflow/rng.hpp"

namespace pseudoflow {

enum class ShapeKind : std::uint8_t { circle = 1, rectangle = 2, triangle = 3 };

struct SceneConfig {
  int width = 64;
  int height = 64;
  int frames_per_clip = 30;
  int min_objects = 2;
  int max_objects = 4;
  double min_size = 7.0;
  double max_size = 13.0;
  double max_speed = 2.0;  // per-object world velocity bound, px/frame
  double max_drift = 0.8;  // camera drift bound, px/frame

  // Domain-X texturing. Scales are feature wavelengths in pixels; the
  // amplitude rides on class-correlated base colors.
  double texture_amp = 0.18;
  double texture_scale = 9.0;
  double hue_jitter = 0.20;

  Palette palette = Palette::default_shapes();

  void validate() const;
};

struct SceneObject {
  ShapeKind kind = ShapeKind::circle;
  double x0 = 0, y0 = 0;  // center at t = 0
  double vx = 0, vy = 0;  // image-space velocity, px/frame
  double size = 8;        // radius / half extent
  double aspect = 1.0;    // rectangle height/width
  double angle = 0.0;
  float base_rgb[3] = {0.5f, 0.5f, 0.5f};
  float noise_amp = 0.2f;
  double tex_scale = 8.0;
  std::uint64_t tex_seed = 0;
};

// Rigid layers over a drifting textured background; everything needed to
// render any frame and to derive the exact backward flow analytically.
struct Scene {
  int width = 0, height = 0, frames = 0;
  double bg_vx = 0, bg_vy = 0;  // apparent background velocity (-camera drift)
  float bg_rgb[3] = {0.4f, 0.4f, 0.4f};
  float bg_noise_amp = 0.2f;
  double bg_tex_scale = 14.0;
  std::uint64_t bg_tex_seed = 0;
  std::vector<SceneObject> objects;  // draw order; later entries on top
};

Scene make_scene(const SceneConfig& cfg, std::uint64_t seed);

ImageU8 render_textured(const Scene& scene, int t);
ImageU8 render_labels(const Scene& scene, int t, const Palette& palette);

// Hard class assignment (topmost layer covering the pixel center).
std::vector<std::uint8_t> label_map(const Scene& scene, int t);

// Index of the topmost covering layer + 1, 0 for background (test support).
std::vector<std::uint8_t> layer_map(const Scene& scene, int t);

// Exact f_{t => t-1} under the layered rigid-motion model; the value at p
// is minus the image velocity of the layer visible at p in frame t.
FlowField scene_backward_flow(const Scene& scene, int t);

}  // namespace pseudoflow

#include "pseudoflow/scene.hpp"

#include <algorithm>
#include <cmath>

namespace pseudoflow {

namespace {

double hash01(std::uint64_t seed, std::int64_t ix, std::int64_t iy) {
  std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(ix + 0x10000)) ^
                    (0xc2b2ae3d27d4eb4fULL * static_cast<std::uint64_t>(iy + 0x20000));
  return static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53;
}

double fade(double t) { return t * t * t * (t * (6.0 * t - 15.0) + 10.0); }

double value_noise(std::uint64_t seed, double x, double y) {
  const double fx = std::floor(x), fy = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  const double tx = fade(x - fx), ty = fade(y - fy);
  const double v00 = hash01(seed, ix, iy), v01 = hash01(seed, ix + 1, iy);
  const double v10 = hash01(seed, ix, iy + 1), v11 = hash01(seed, ix + 1, iy + 1);
  const double a = v00 + (v01 - v00) * tx;
  const double b = v10 + (v11 - v10) * tx;
  return a + (b - a) * ty;
}

// Two gentle octaves. Feature wavelengths stay well above the pixel pitch
// so a bilinearly resampled frame reconstructs its neighbor to within the
// documented flow-consistency bound.
double texture_offset(std::uint64_t seed, double x, double y, double scale) {
  const double n1 = value_noise(seed, x / scale, y / scale);
  const double n2 = value_noise(seed ^ 0x517cc1b727220a95ULL, x / (scale * 0.6), y / (scale * 0.6));
  return (2.0 * n1 - 1.0) + 0.3 * (2.0 * n2 - 1.0);
}

struct Vec2 {
  double x, y;
};

double sd_circle(Vec2 p, double r) { return std::sqrt(p.x * p.x + p.y * p.y) - r; }

double sd_box(Vec2 p, double hw, double hh) {
  return std::max(std::abs(p.x) - hw, std::abs(p.y) - hh);
}

double sd_equilateral_triangle(Vec2 p, double r) {
  const double k = std::sqrt(3.0);
  double px = std::abs(p.x) - r;
  double py = p.y + r / k;
  if (px + k * py > 0.0) {
    const double nx = (px - k * py) / 2.0;
    const double ny = (-k * px - py) / 2.0;
    px = nx;
    py = ny;
  }
  px -= std::clamp(px, -2.0 * r, 0.0);
  return -std::sqrt(px * px + py * py) * (py > 0 ? 1.0 : -1.0);
}

double object_sdf(const SceneObject& o, double px, double py, int t) {
  const double cx = o.x0 + t * o.vx;
  const double cy = o.y0 + t * o.vy;
  const double c = std::cos(-o.angle), s = std::sin(-o.angle);
  const double lx = c * (px - cx) - s * (py - cy);
  const double ly = s * (px - cx) + c * (py - cy);
  switch (o.kind) {
    case ShapeKind::circle: return sd_circle({lx, ly}, o.size);
    case ShapeKind::rectangle: return sd_box({lx, ly}, o.size, o.size * o.aspect);
    case ShapeKind::triangle: return sd_equilateral_triangle({lx, ly}, o.size);
  }
  return 1e9;
}

double coverage(double sd) { return std::clamp(0.5 - sd, 0.0, 1.0); }

struct ClassBase {
  float r, g, b;
};

// Base colors sit inside [0.3, 0.7] so texture offsets never reach the
// 0/1 clamp (a clamp kink would break the smooth-texture reconstruction
// bound).
ClassBase class_base(ShapeKind k) {
  switch (k) {
    case ShapeKind::circle: return {0.60f, 0.36f, 0.34f};
    case ShapeKind::rectangle: return {0.36f, 0.57f, 0.38f};
    case ShapeKind::triangle: return {0.35f, 0.42f, 0.60f};
  }
  return {0.5f, 0.5f, 0.5f};
}

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L));
}

}  // namespace

void SceneConfig::validate() const {
  if (width < 8 || height < 8) throw ConfigError("scene: resolution must be at least 8x8");
  if (frames_per_clip < 1) throw ConfigError("scene: frames_per_clip must be >= 1");
  if (min_objects < 0 || max_objects < min_objects) throw ConfigError("scene: bad object count range");
  if (min_size <= 0 || max_size < min_size) throw ConfigError("scene: bad size range");
  if (max_speed < 0 || max_drift < 0) throw ConfigError("scene: speeds must be >= 0");
  palette.validate();
  if (palette.size() < 4) throw ConfigError("scene: palette needs background plus three shape classes");
}

Scene make_scene(const SceneConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  Scene sc;
  sc.width = cfg.width;
  sc.height = cfg.height;
  sc.frames = cfg.frames_per_clip;

  const double drift_x = rng.uniform(-cfg.max_drift, cfg.max_drift);
  const double drift_y = rng.uniform(-cfg.max_drift, cfg.max_drift);
  sc.bg_vx = -drift_x;
  sc.bg_vy = -drift_y;
  for (int c = 0; c < 3; ++c)
    sc.bg_rgb[c] = static_cast<float>(
        std::clamp(0.45 + rng.uniform(-cfg.hue_jitter, cfg.hue_jitter), 0.30, 0.70));
  sc.bg_noise_amp = static_cast<float>(cfg.texture_amp * rng.uniform(0.8, 1.2));
  sc.bg_tex_scale = cfg.texture_scale * 1.6 * rng.uniform(0.9, 1.2);
  sc.bg_tex_seed = rng.next_u64();

  const int count =
      cfg.min_objects + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.max_objects - cfg.min_objects + 1)));
  const int last_t = cfg.frames_per_clip - 1;
  for (int i = 0; i < count; ++i) {
    SceneObject o;
    o.kind = static_cast<ShapeKind>(1 + rng.below(3));
    o.size = rng.uniform(cfg.min_size, cfg.max_size);
    o.aspect = rng.uniform(0.55, 1.0);
    o.angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    double wx = rng.uniform(-cfg.max_speed, cfg.max_speed);
    double wy = rng.uniform(-cfg.max_speed, cfg.max_speed);
    o.vx = wx - drift_x;
    o.vy = wy - drift_y;

    // Keep the center inside the frame (with a little slack) for the whole
    // clip; shrink the velocity if no start position works.
    const double m = 1.0 + 0.25 * o.size;
    bool placed = false;
    for (int attempt = 0; attempt < 80 && !placed; ++attempt) {
      if (attempt > 0 && attempt % 20 == 0) {
        o.vx *= 0.5;
        o.vy *= 0.5;
      }
      o.x0 = rng.uniform(m, cfg.width - 1 - m);
      o.y0 = rng.uniform(m, cfg.height - 1 - m);
      const double xe = o.x0 + last_t * o.vx, ye = o.y0 + last_t * o.vy;
      placed = xe >= m && xe <= cfg.width - 1 - m && ye >= m && ye <= cfg.height - 1 - m;
    }
    if (!placed) {
      o.vx = o.vy = 0;
      o.x0 = cfg.width / 2.0;
      o.y0 = cfg.height / 2.0;
    }

    const ClassBase base = class_base(o.kind);
    const float jr = static_cast<float>(rng.uniform(-cfg.hue_jitter, cfg.hue_jitter));
    const float jg = static_cast<float>(rng.uniform(-cfg.hue_jitter, cfg.hue_jitter));
    const float jb = static_cast<float>(rng.uniform(-cfg.hue_jitter, cfg.hue_jitter));
    o.base_rgb[0] = std::clamp(base.r + jr, 0.30f, 0.70f);
    o.base_rgb[1] = std::clamp(base.g + jg, 0.30f, 0.70f);
    o.base_rgb[2] = std::clamp(base.b + jb, 0.30f, 0.70f);
    o.noise_amp = static_cast<float>(cfg.texture_amp * rng.uniform(0.8, 1.2));
    o.tex_scale = cfg.texture_scale * rng.uniform(0.85, 1.25);
    o.tex_seed = rng.next_u64();
    sc.objects.push_back(o);
  }
  return sc;
}

ImageU8 render_textured(const Scene& sc, int t) {
  ImageU8 img(sc.width, sc.height, 3);
  for (int y = 0; y < sc.height; ++y) {
    for (int x = 0; x < sc.width; ++x) {
      const double bx = x - t * sc.bg_vx, by = y - t * sc.bg_vy;
      const double bn = sc.bg_noise_amp * texture_offset(sc.bg_tex_seed, bx, by, sc.bg_tex_scale);
      double r = std::clamp(sc.bg_rgb[0] + bn, 0.0, 1.0);
      double g = std::clamp(sc.bg_rgb[1] + bn, 0.0, 1.0);
      double b = std::clamp(sc.bg_rgb[2] + bn, 0.0, 1.0);
      for (const auto& o : sc.objects) {
        const double a = coverage(object_sdf(o, x, y, t));
        if (a <= 0) continue;
        const double lx = x - (o.x0 + t * o.vx), ly = y - (o.y0 + t * o.vy);
        const double on = o.noise_amp * texture_offset(o.tex_seed, lx, ly, o.tex_scale);
        const double orr = std::clamp(o.base_rgb[0] + on, 0.0, 1.0);
        const double og = std::clamp(o.base_rgb[1] + on, 0.0, 1.0);
        const double ob = std::clamp(o.base_rgb[2] + on, 0.0, 1.0);
        r += (orr - r) * a;
        g += (og - g) * a;
        b += (ob - b) * a;
      }
      img.pixels[img.index(x, y, 0)] = quantize(r);
      img.pixels[img.index(x, y, 1)] = quantize(g);
      img.pixels[img.index(x, y, 2)] = quantize(b);
    }
  }
  return img;
}

ImageU8 render_labels(const Scene& sc, int t, const Palette& palette) {
  palette.validate();
  ImageU8 img(sc.width, sc.height, 3);
  for (int y = 0; y < sc.height; ++y) {
    for (int x = 0; x < sc.width; ++x) {
      double rgb[3];
      for (int c = 0; c < 3; ++c) rgb[c] = palette.colors[0][c];
      for (const auto& o : sc.objects) {
        const double a = coverage(object_sdf(o, x, y, t));
        if (a <= 0) continue;
        const auto& pc = palette.colors[static_cast<std::size_t>(o.kind)];
        for (int c = 0; c < 3; ++c) rgb[c] += (pc[c] - rgb[c]) * a;
      }
      for (int c = 0; c < 3; ++c)
        img.pixels[img.index(x, y, c)] =
            static_cast<std::uint8_t>(std::clamp(std::lround(rgb[c]), 0L, 255L));
    }
  }
  return img;
}

std::vector<std::uint8_t> label_map(const Scene& sc, int t) {
  std::vector<std::uint8_t> ids(static_cast<std::size_t>(sc.width) * sc.height, 0);
  for (int y = 0; y < sc.height; ++y)
    for (int x = 0; x < sc.width; ++x) {
      std::uint8_t id = 0;
      for (const auto& o : sc.objects)
        if (object_sdf(o, x, y, t) <= 0) id = static_cast<std::uint8_t>(o.kind);
      ids[static_cast<std::size_t>(y) * sc.width + x] = id;
    }
  return ids;
}

std::vector<std::uint8_t> layer_map(const Scene& sc, int t) {
  std::vector<std::uint8_t> ids(static_cast<std::size_t>(sc.width) * sc.height, 0);
  for (int y = 0; y < sc.height; ++y)
    for (int x = 0; x < sc.width; ++x) {
      std::uint8_t id = 0;
      for (std::size_t i = 0; i < sc.objects.size(); ++i)
        if (object_sdf(sc.objects[i], x, y, t) <= 0) id = static_cast<std::uint8_t>(i + 1);
      ids[static_cast<std::size_t>(y) * sc.width + x] = id;
    }
  return ids;
}

FlowField scene_backward_flow(const Scene& sc, int t) {
  if (t < 1 || t >= sc.frames) throw ConfigError("scene_backward_flow: t must be in [1, frames)");
  FlowField f(sc.width, sc.height);
  for (int y = 0; y < sc.height; ++y)
    for (int x = 0; x < sc.width; ++x) {
      double vx = sc.bg_vx, vy = sc.bg_vy;
      for (const auto& o : sc.objects)
        if (object_sdf(o, x, y, t) <= 0) {
          vx = o.vx;
          vy = o.vy;
        }
      f.dx[f.index(x, y)] = static_cast<float>(-vx);
      f.dy[f.index(x, y)] = static_cast<float>(-vy);
    }
  return f;
}

}  // namespace pseudoflow

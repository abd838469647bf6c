#include "pseudoflow/flow.hpp"

#include "pseudoflow/warp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace pseudoflow {

namespace {

constexpr float kFloMagic = 202021.25f;

// Grid cell i covers pixels [i*block, (i+1)*block); upsampling follows
// align-corners-false semantics so that sample i sits at the cell center.
void upsample_grid_bilinear(const std::vector<double>& grid, int gw, int gh, int block, int w,
                            int h, std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(w) * h, 0.0);
  for (int y = 0; y < h; ++y) {
    const double gy = (y + 0.5) / block - 0.5;
    const int y0 = static_cast<int>(std::floor(gy));
    const double fy = gy - y0;
    const int y0c = std::clamp(y0, 0, gh - 1);
    const int y1c = std::clamp(y0 + 1, 0, gh - 1);
    for (int x = 0; x < w; ++x) {
      const double gx = (x + 0.5) / block - 0.5;
      const int x0 = static_cast<int>(std::floor(gx));
      const double fx = gx - x0;
      const int x0c = std::clamp(x0, 0, gw - 1);
      const int x1c = std::clamp(x0 + 1, 0, gw - 1);
      const double v0 = (1.0 - fx) * grid[static_cast<std::size_t>(y0c) * gw + x0c] +
                        fx * grid[static_cast<std::size_t>(y0c) * gw + x1c];
      const double v1 = (1.0 - fx) * grid[static_cast<std::size_t>(y1c) * gw + x0c] +
                        fx * grid[static_cast<std::size_t>(y1c) * gw + x1c];
      out[static_cast<std::size_t>(y) * w + x] = (1.0 - fy) * v0 + fy * v1;
    }
  }
}

// Box mean over the in-bounds part of the window; summed-area table in
// double keeps the fast path within 1e-5 of the plain nested-loop filter.
void box_filter_mean(std::vector<double>& values, int w, int h, int filter) {
  if (filter <= 1) return;
  const int r0 = (filter - 1) / 2;
  const int r1 = filter - 1 - r0;
  std::vector<double> sat(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      sat[static_cast<std::size_t>(y + 1) * (w + 1) + (x + 1)] =
          values[static_cast<std::size_t>(y) * w + x] +
          sat[static_cast<std::size_t>(y) * (w + 1) + (x + 1)] +
          sat[static_cast<std::size_t>(y + 1) * (w + 1) + x] -
          sat[static_cast<std::size_t>(y) * (w + 1) + x];
    }
  }
  for (int y = 0; y < h; ++y) {
    const int y1 = std::max(0, y - r0), y2 = std::min(h - 1, y + r1);
    for (int x = 0; x < w; ++x) {
      const int x1 = std::max(0, x - r0), x2 = std::min(w - 1, x + r1);
      const double sum = sat[static_cast<std::size_t>(y2 + 1) * (w + 1) + (x2 + 1)] -
                         sat[static_cast<std::size_t>(y1) * (w + 1) + (x2 + 1)] -
                         sat[static_cast<std::size_t>(y2 + 1) * (w + 1) + x1] +
                         sat[static_cast<std::size_t>(y1) * (w + 1) + x1];
      const double count = static_cast<double>(y2 - y1 + 1) * (x2 - x1 + 1);
      values[static_cast<std::size_t>(y) * w + x] = sum / count;
    }
  }
}

void clamp_magnitude(FlowField& f) {
  const float limit = 0.5f * static_cast<float>(std::min(f.width, f.height));
  for (auto& v : f.dx) v = std::clamp(v, -limit, limit);
  for (auto& v : f.dy) v = std::clamp(v, -limit, limit);
}

FlowField synthesize_full(const FlowSpec& spec, int width, int height, Rng& rng) {
  const int gw = (width + spec.block - 1) / spec.block;
  const int gh = (height + spec.block - 1) / spec.block;

  std::vector<double> grid_x(static_cast<std::size_t>(gw) * gh);
  std::vector<double> grid_y(static_cast<std::size_t>(gw) * gh);
  for (auto& v : grid_x) v = rng.normal(0.0, spec.sigma_m);
  for (auto& v : grid_y) v = rng.normal(0.0, spec.sigma_m);
  const double shift_x = rng.normal(0.0, spec.sigma_s);
  const double shift_y = rng.normal(0.0, spec.sigma_s);

  std::vector<double> dx, dy;
  upsample_grid_bilinear(grid_x, gw, gh, spec.block, width, height, dx);
  upsample_grid_bilinear(grid_y, gw, gh, spec.block, width, height, dy);
  for (auto& v : dx) v += shift_x;
  for (auto& v : dy) v += shift_y;
  box_filter_mean(dx, width, height, spec.filter);
  box_filter_mean(dy, width, height, spec.filter);

  FlowField f(width, height);
  for (std::size_t i = 0; i < f.pixels(); ++i) {
    f.dx[i] = static_cast<float>(dx[i]);
    f.dy[i] = static_cast<float>(dy[i]);
  }
  clamp_magnitude(f);
  return f;
}

FlowField synthesize_with_rng(const FlowSpec& spec, int width, int height, Rng& rng) {
  switch (spec.mode) {
    case FlowMode::wrong_pair:
    case FlowMode::full:
      return synthesize_full(spec, width, height, rng);
    case FlowMode::translation_only: {
      const float sx = static_cast<float>(rng.normal(0.0, spec.sigma_s));
      const float sy = static_cast<float>(rng.normal(0.0, spec.sigma_s));
      FlowField f(width, height);
      std::fill(f.dx.begin(), f.dx.end(), sx);
      std::fill(f.dy.begin(), f.dy.end(), sy);
      clamp_magnitude(f);
      return f;
    }
    case FlowMode::scaling_only: {
      const double s = rng.normal(0.0, spec.scale_sigma);
      const double cx = 0.5 * (width - 1), cy = 0.5 * (height - 1);
      FlowField f(width, height);
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
          f.dx[f.index(x, y)] = static_cast<float>(s * (x - cx));
          f.dy[f.index(x, y)] = static_cast<float>(s * (y - cy));
        }
      clamp_magnitude(f);
      return f;
    }
  }
  throw ConfigError("unknown flow mode");
}

}  // namespace

void FlowSpec::validate() const {
  if (sigma_m < 0 || sigma_s < 0 || scale_sigma < 0)
    throw ConfigError("flow spec: sigmas must be >= 0");
  if (block < 1) throw ConfigError("flow spec: block must be >= 1");
  if (filter < 1) throw ConfigError("flow spec: filter must be >= 1");
  if (reference_resolution < 1) throw ConfigError("flow spec: reference resolution must be >= 1");
}

void NoiseSpec::validate() const {
  if (sigma_low < 0 || sigma_high < sigma_low)
    throw ConfigError("noise spec: requires 0 <= sigma_low <= sigma_high");
}

FlowSpec scale_spec(const FlowSpec& spec, int width, int height) {
  spec.validate();
  const double factor = static_cast<double>(std::min(width, height)) / spec.reference_resolution;
  FlowSpec r = spec;
  r.block = std::max<int>(1, static_cast<int>(std::llround(spec.block * factor)));
  r.filter = std::max<int>(1, static_cast<int>(std::llround(spec.filter * factor)));
  r.sigma_m = spec.sigma_m * factor;
  r.sigma_s = spec.sigma_s * factor;
  return r;
}

FlowField synthesize_flow(const FlowSpec& spec, int width, int height, std::uint64_t seed) {
  spec.validate();
  if (width < 1 || height < 1) throw ConfigError("flow synthesis: dimensions must be >= 1");
  const FlowSpec eff = spec.auto_scale ? scale_spec(spec, width, height) : spec;
  Rng rng(seed);
  return synthesize_with_rng(eff, width, height, rng);
}

FlowDraw synthesize_flow_draw(const FlowSpec& spec, int width, int height, std::uint64_t seed) {
  spec.validate();
  if (width < 1 || height < 1) throw ConfigError("flow synthesis: dimensions must be >= 1");
  const FlowSpec eff = spec.auto_scale ? scale_spec(spec, width, height) : spec;
  Rng rng(seed);
  FlowDraw draw;
  draw.wrong_pair = spec.mode == FlowMode::wrong_pair;
  auto first = std::make_shared<FlowField>(synthesize_with_rng(eff, width, height, rng));
  draw.real = first;
  draw.translated = draw.wrong_pair
                        ? std::make_shared<FlowField>(synthesize_with_rng(eff, width, height, rng))
                        : first;
  return draw;
}

template <typename T>
TensorT<T> simulate_future_frame(TapeT<T>* tape, const TensorT<T>& image, const FlowField& flow,
                                 const NoiseSpec& noise, Rng& rng) {
  noise.validate();
  TensorT<T> warped = backward_warp(tape, image, flow, Border::clamp);
  if (!noise.active()) return warped;
  const double sigma = rng.uniform(noise.sigma_low, noise.sigma_high);
  TensorT<T> delta(image.shape());
  for (auto& v : delta.mut()) v = static_cast<T>(rng.normal(0.0, sigma));
  return clamp_unit(tape, add(tape, warped, delta));
}

template TensorT<float> simulate_future_frame<float>(TapeT<float>*, const TensorT<float>&,
                                                     const FlowField&, const NoiseSpec&, Rng&);
template TensorT<double> simulate_future_frame<double>(TapeT<double>*, const TensorT<double>&,
                                                       const FlowField&, const NoiseSpec&, Rng&);

void write_flo(const std::filesystem::path& path, const FlowField& flow) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  const std::int32_t w = flow.width, h = flow.height;
  out.write(reinterpret_cast<const char*>(&kFloMagic), 4);
  out.write(reinterpret_cast<const char*>(&w), 4);
  out.write(reinterpret_cast<const char*>(&h), 4);
  std::vector<float> row(static_cast<std::size_t>(2) * flow.width);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      row[2 * static_cast<std::size_t>(x)] = flow.dx[flow.index(x, y)];
      row[2 * static_cast<std::size_t>(x) + 1] = flow.dy[flow.index(x, y)];
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * 4));
  }
  if (!out) throw IoError("write failed: " + path.string());
}

FlowField read_flo(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  float magic = 0;
  std::int32_t w = 0, h = 0;
  in.read(reinterpret_cast<char*>(&magic), 4);
  in.read(reinterpret_cast<char*>(&w), 4);
  in.read(reinterpret_cast<char*>(&h), 4);
  if (!in) throw FormatError("truncated .flo header: " + path.string());
  if (magic != kFloMagic)
    throw FormatError("bad .flo magic in " + path.string() + " (not a Middlebury flow file)");
  if (w < 1 || h < 1 || w > 1 << 20 || h > 1 << 20)
    throw FormatError("implausible .flo dimensions in " + path.string());
  FlowField f(w, h);
  std::vector<float> row(static_cast<std::size_t>(2) * w);
  for (int y = 0; y < h; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * 4));
    if (!in) throw FormatError("truncated .flo payload: " + path.string());
    for (int x = 0; x < w; ++x) {
      f.dx[f.index(x, y)] = row[2 * static_cast<std::size_t>(x)];
      f.dy[f.index(x, y)] = row[2 * static_cast<std::size_t>(x) + 1];
    }
  }
  return f;
}

std::vector<std::uint8_t> flow_debug_rgb(const FlowField& flow) {
  float maxmag = 1e-6f;
  for (std::size_t i = 0; i < flow.pixels(); ++i)
    maxmag = std::max({maxmag, std::abs(flow.dx[i]), std::abs(flow.dy[i])});
  std::vector<std::uint8_t> rgb(flow.pixels() * 3);
  for (std::size_t i = 0; i < flow.pixels(); ++i) {
    const float u = flow.dx[i] / maxmag, v = flow.dy[i] / maxmag;
    rgb[3 * i] = static_cast<std::uint8_t>(std::clamp(127.5f + 127.5f * u, 0.f, 255.f));
    rgb[3 * i + 1] = static_cast<std::uint8_t>(std::clamp(127.5f + 127.5f * v, 0.f, 255.f));
    rgb[3 * i + 2] = 128;
  }
  return rgb;
}

}  // namespace pseudoflow

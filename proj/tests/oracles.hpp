// Independent reference implementations the tests check the library
// against. Everything here is written as plainly as possible (nested loops,
// no shared code with the library paths under test).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pseudoflow/flow.hpp"
#include "pseudoflow/rng.hpp"
#include "pseudoflow/tensor.hpp"

namespace oracles {

using pseudoflow::FlowField;
using pseudoflow::FlowSpec;
using pseudoflow::Rng;
using pseudoflow::Shape;

// ---------------------------------------------------------------- conv ----

enum class Pad { zero, reflect };

inline std::int64_t reflect101(std::int64_t i, std::int64_t n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

template <typename T>
pseudoflow::TensorT<T> naive_conv2d(const pseudoflow::TensorT<T>& input,
                                    const pseudoflow::TensorT<T>& weight,
                                    const pseudoflow::TensorT<T>& bias, int stride, int pad,
                                    Pad mode) {
  const std::int64_t N = input.size(0), C = input.size(1), H = input.size(2), W = input.size(3);
  const std::int64_t O = weight.size(0), KH = weight.size(2), KW = weight.size(3);
  const std::int64_t OH = (H + 2 * pad - KH) / stride + 1;
  const std::int64_t OW = (W + 2 * pad - KW) / stride + 1;
  pseudoflow::TensorT<T> out({N, O, OH, OW});
  for (std::int64_t n = 0; n < N; ++n)
    for (std::int64_t o = 0; o < O; ++o)
      for (std::int64_t oy = 0; oy < OH; ++oy)
        for (std::int64_t ox = 0; ox < OW; ++ox) {
          double acc = bias.empty() ? 0.0 : static_cast<double>(bias[o]);
          for (std::int64_t c = 0; c < C; ++c)
            for (std::int64_t ky = 0; ky < KH; ++ky)
              for (std::int64_t kx = 0; kx < KW; ++kx) {
                std::int64_t iy = oy * stride - pad + ky;
                std::int64_t ix = ox * stride - pad + kx;
                double v = 0.0;
                if (mode == Pad::reflect) {
                  iy = reflect101(iy, H);
                  ix = reflect101(ix, W);
                  v = input[((n * C + c) * H + iy) * W + ix];
                } else if (iy >= 0 && iy < H && ix >= 0 && ix < W) {
                  v = input[((n * C + c) * H + iy) * W + ix];
                }
                acc += v * static_cast<double>(weight[((o * C + c) * KH + ky) * KW + kx]);
              }
          out[((n * O + o) * OH + oy) * OW + ox] = static_cast<T>(acc);
        }
  return out;
}

template <typename T>
pseudoflow::TensorT<T> naive_upsample2x(const pseudoflow::TensorT<T>& input) {
  const std::int64_t N = input.size(0), C = input.size(1), H = input.size(2), W = input.size(3);
  pseudoflow::TensorT<T> out({N, C, 2 * H, 2 * W});
  for (std::int64_t n = 0; n < N; ++n)
    for (std::int64_t c = 0; c < C; ++c)
      for (std::int64_t y = 0; y < 2 * H; ++y)
        for (std::int64_t x = 0; x < 2 * W; ++x)
          out[((n * C + c) * 2 * H + y) * 2 * W + x] =
              input[((n * C + c) * H + y / 2) * W + x / 2];
  return out;
}

// ---------------------------------------------------------------- warp ----

// Integer-displacement gather with clamped indices: the exact expected
// result of bilinear warping when every displacement is integral.
template <typename T>
pseudoflow::TensorT<T> gather_with_clamp(const pseudoflow::TensorT<T>& img,
                                         const std::vector<int>& dx, const std::vector<int>& dy) {
  const std::int64_t C = img.size(1), H = img.size(2), W = img.size(3);
  pseudoflow::TensorT<T> out(img.shape());
  for (std::int64_t c = 0; c < C; ++c)
    for (std::int64_t y = 0; y < H; ++y)
      for (std::int64_t x = 0; x < W; ++x) {
        const std::size_t f = static_cast<std::size_t>(y) * W + x;
        const std::int64_t sx = std::clamp<std::int64_t>(x + dx[f], 0, W - 1);
        const std::int64_t sy = std::clamp<std::int64_t>(y + dy[f], 0, H - 1);
        out[(c * H + y) * W + x] = img[(c * H + sy) * W + sx];
      }
  return out;
}

// --------------------------------------------------------- flow synth -----

// The reference pipeline, written directly from its definition: per-axis
// gaussian grid, align-corners-false bilinear upsampling, constant shift,
// in-bounds box mean, magnitude clamp. Draw order matches the library
// contract (grid dx, grid dy, shift dx, shift dy).
inline FlowField naive_flow_pipeline(const FlowSpec& spec_at_resolution, int width, int height,
                                     std::uint64_t seed) {
  const FlowSpec& s = spec_at_resolution;
  Rng rng(seed);
  const int gw = (width + s.block - 1) / s.block;
  const int gh = (height + s.block - 1) / s.block;
  std::vector<double> grid_x(static_cast<std::size_t>(gw) * gh);
  std::vector<double> grid_y(grid_x.size());
  for (auto& v : grid_x) v = rng.normal(0.0, s.sigma_m);
  for (auto& v : grid_y) v = rng.normal(0.0, s.sigma_m);
  const double shift_x = rng.normal(0.0, s.sigma_s);
  const double shift_y = rng.normal(0.0, s.sigma_s);

  auto upsample_at = [&](const std::vector<double>& grid, int px, int py) {
    const double gx = (px + 0.5) / s.block - 0.5;
    const double gy = (py + 0.5) / s.block - 0.5;
    const int x0 = static_cast<int>(std::floor(gx));
    const int y0 = static_cast<int>(std::floor(gy));
    const double fx = gx - x0, fy = gy - y0;
    auto at = [&](int yy, int xx) {
      xx = std::clamp(xx, 0, gw - 1);
      yy = std::clamp(yy, 0, gh - 1);
      return grid[static_cast<std::size_t>(yy) * gw + xx];
    };
    const double top = at(y0, x0) * (1 - fx) + at(y0, x0 + 1) * fx;
    const double bot = at(y0 + 1, x0) * (1 - fx) + at(y0 + 1, x0 + 1) * fx;
    return top * (1 - fy) + bot * fy;
  };

  std::vector<double> dx(static_cast<std::size_t>(width) * height);
  std::vector<double> dy(dx.size());
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      dx[static_cast<std::size_t>(y) * width + x] = upsample_at(grid_x, x, y) + shift_x;
      dy[static_cast<std::size_t>(y) * width + x] = upsample_at(grid_y, x, y) + shift_y;
    }

  auto box = [&](const std::vector<double>& in) {
    std::vector<double> out(in.size());
    const int r0 = (s.filter - 1) / 2;
    const int r1 = s.filter - 1 - r0;
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        double sum = 0.0;
        int count = 0;
        for (int yy = y - r0; yy <= y + r1; ++yy)
          for (int xx = x - r0; xx <= x + r1; ++xx) {
            if (yy < 0 || yy >= height || xx < 0 || xx >= width) continue;
            sum += in[static_cast<std::size_t>(yy) * width + xx];
            ++count;
          }
        out[static_cast<std::size_t>(y) * width + x] = sum / count;
      }
    return out;
  };
  if (s.filter > 1) {
    dx = box(dx);
    dy = box(dy);
  }

  FlowField f(width, height);
  const float limit = 0.5f * static_cast<float>(std::min(width, height));
  for (std::size_t i = 0; i < f.pixels(); ++i) {
    f.dx[i] = std::clamp(static_cast<float>(dx[i]), -limit, limit);
    f.dy[i] = std::clamp(static_cast<float>(dy[i]), -limit, limit);
  }
  return f;
}

// ------------------------------------------------------------- metrics ----

// Brute-force occlusion-masked warping error, straight from its formula.
inline double naive_warping_error(const std::vector<pseudoflow::Tensor>& translated,
                                  const std::vector<pseudoflow::Tensor>& source,
                                  const std::vector<FlowField>& flows, double alpha) {
  auto bilinear = [](const pseudoflow::Tensor& img, std::int64_t c, double sx, double sy) {
    const std::int64_t H = img.size(2), W = img.size(3);
    const auto clampi = [](std::int64_t v, std::int64_t n) {
      return v < 0 ? 0 : (v >= n ? n - 1 : v);
    };
    const std::int64_t x0 = static_cast<std::int64_t>(std::floor(sx));
    const std::int64_t y0 = static_cast<std::int64_t>(std::floor(sy));
    const double fx = sx - x0, fy = sy - y0;
    auto at = [&](std::int64_t yy, std::int64_t xx) {
      return static_cast<double>(img[(c * H + clampi(yy, H)) * W + clampi(xx, W)]);
    };
    return (at(y0, x0) * (1 - fx) + at(y0, x0 + 1) * fx) * (1 - fy) +
           (at(y0 + 1, x0) * (1 - fx) + at(y0 + 1, x0 + 1) * fx) * fy;
  };

  double sum = 0.0;
  std::int64_t count = 0;
  for (std::size_t t = 1; t < translated.size(); ++t) {
    const FlowField& fl = flows[t - 1];
    const std::int64_t C = translated[t].size(1), H = translated[t].size(2),
                       W = translated[t].size(3);
    for (std::int64_t y = 0; y < H; ++y)
      for (std::int64_t x = 0; x < W; ++x) {
        const double sx = x + fl.dx[fl.index(static_cast<int>(x), static_cast<int>(y))];
        const double sy = y + fl.dy[fl.index(static_cast<int>(x), static_cast<int>(y))];
        double d2 = 0.0;
        for (std::int64_t c = 0; c < C; ++c) {
          const double d = static_cast<double>(source[t][(c * H + y) * W + x]) -
                           bilinear(source[t - 1], c, sx, sy);
          d2 += d * d;
        }
        const double mask = std::exp(-alpha * std::sqrt(d2));
        for (std::int64_t c = 0; c < C; ++c) {
          const double diff = static_cast<double>(translated[t][(c * H + y) * W + x]) -
                              bilinear(translated[t - 1], c, sx, sy);
          sum += mask * std::abs(diff);
          ++count;
        }
      }
  }
  return sum / static_cast<double>(count);
}

// Per-pixel counting scores, no confusion matrix.
struct NaiveSeg {
  double mp, ac, miou;
};

inline NaiveSeg naive_segmentation(const std::vector<std::vector<std::uint8_t>>& pred,
                                   const std::vector<std::vector<std::uint8_t>>& gt,
                                   int n_classes) {
  std::int64_t correct = 0, total = 0;
  NaiveSeg out{};
  double acc_sum = 0, iou_sum = 0;
  int present = 0;
  for (int k = 0; k < n_classes; ++k) {
    std::int64_t tp = 0, in_gt = 0, in_pred = 0;
    for (std::size_t m = 0; m < pred.size(); ++m)
      for (std::size_t i = 0; i < pred[m].size(); ++i) {
        if (k == 0) {
          ++total;
          if (pred[m][i] == gt[m][i]) ++correct;
        }
        if (gt[m][i] == k) {
          ++in_gt;
          if (pred[m][i] == k) ++tp;
        }
        if (pred[m][i] == k) ++in_pred;
      }
    if (in_gt > 0) {
      ++present;
      acc_sum += static_cast<double>(tp) / static_cast<double>(in_gt);
      iou_sum += static_cast<double>(tp) / static_cast<double>(in_gt + in_pred - tp);
    }
  }
  out.mp = static_cast<double>(correct) / static_cast<double>(total);
  out.ac = acc_sum / present;
  out.miou = iou_sum / present;
  return out;
}

}  // namespace oracles

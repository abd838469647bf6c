#include "pseudoflow/warp.hpp"

#include <cmath>

namespace pseudoflow {

namespace {

template <typename T>
struct Taps {
  std::int64_t x0, x1, y0, y1;
  T wx, wy;
  bool x0_in, x1_in, y0_in, y1_in;
};

template <typename T>
Taps<T> bilinear_taps(T sx, T sy, std::int64_t w, std::int64_t h, Border border) {
  Taps<T> t{};
  const T fx = std::floor(sx), fy = std::floor(sy);
  t.x0 = static_cast<std::int64_t>(fx);
  t.y0 = static_cast<std::int64_t>(fy);
  t.x1 = t.x0 + 1;
  t.y1 = t.y0 + 1;
  t.wx = sx - fx;
  t.wy = sy - fy;
  auto inside = [](std::int64_t v, std::int64_t n) { return v >= 0 && v < n; };
  t.x0_in = inside(t.x0, w);
  t.x1_in = inside(t.x1, w);
  t.y0_in = inside(t.y0, h);
  t.y1_in = inside(t.y1, h);
  if (border == Border::clamp) {
    auto clampi = [](std::int64_t v, std::int64_t n) { return v < 0 ? 0 : (v >= n ? n - 1 : v); };
    t.x0 = clampi(t.x0, w);
    t.x1 = clampi(t.x1, w);
    t.y0 = clampi(t.y0, h);
    t.y1 = clampi(t.y1, h);
    t.x0_in = t.x1_in = t.y0_in = t.y1_in = true;
  }
  return t;
}

}  // namespace

template <typename T>
TensorT<T> backward_warp(TapeT<T>* tape, const TensorT<T>& image, const FlowField& flow,
                         Border border) {
  if (image.dims() != 4) throw ShapeError("backward_warp: image must be NCHW");
  const std::int64_t n = image.size(0), c = image.size(1), h = image.size(2), w = image.size(3);
  if (flow.width != w || flow.height != h)
    throw ShapeError("backward_warp: flow " + std::to_string(flow.width) + "x" +
                     std::to_string(flow.height) + " does not match image " + shape_str(image.shape()));

  TensorT<T> out(image.shape());
  const T* src = image.data().data();
  T* dst = out.mut().data();
  const std::int64_t plane = h * w;

  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      const std::size_t fi = flow.index(static_cast<int>(x), static_cast<int>(y));
      const T sx = static_cast<T>(x) + static_cast<T>(flow.dx[fi]);
      const T sy = static_cast<T>(y) + static_cast<T>(flow.dy[fi]);
      const Taps<T> t = bilinear_taps(sx, sy, w, h, border);
      const T w00 = (T(1) - t.wx) * (T(1) - t.wy);
      const T w01 = t.wx * (T(1) - t.wy);
      const T w10 = (T(1) - t.wx) * t.wy;
      const T w11 = t.wx * t.wy;
      for (std::int64_t pc = 0; pc < n * c; ++pc) {
        const T* sp = src + pc * plane;
        T v = T(0);
        if (t.y0_in && t.x0_in) v += w00 * sp[t.y0 * w + t.x0];
        if (t.y0_in && t.x1_in) v += w01 * sp[t.y0 * w + t.x1];
        if (t.y1_in && t.x0_in) v += w10 * sp[t.y1 * w + t.x0];
        if (t.y1_in && t.x1_in) v += w11 * sp[t.y1 * w + t.x1];
        dst[pc * plane + y * w + x] = v;
      }
    }
  }
  detail::check_finite(out, "backward_warp");

  if (tape && image.node() >= 0) {
    const int in_node = image.node();
    const FlowField flow_saved = flow;
    const Shape in_shape = image.shape();
    out.set_node(tape->record({in_node}, [=](const TensorT<T>& g, GradSinkT<T>& sink) {
      TensorT<T> din(in_shape);
      const T* gp = g.data().data();
      T* dp = din.mut().data();
      for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
          const std::size_t fi = flow_saved.index(static_cast<int>(x), static_cast<int>(y));
          const T sx = static_cast<T>(x) + static_cast<T>(flow_saved.dx[fi]);
          const T sy = static_cast<T>(y) + static_cast<T>(flow_saved.dy[fi]);
          const Taps<T> t = bilinear_taps(sx, sy, w, h, border);
          const T w00 = (T(1) - t.wx) * (T(1) - t.wy);
          const T w01 = t.wx * (T(1) - t.wy);
          const T w10 = (T(1) - t.wx) * t.wy;
          const T w11 = t.wx * t.wy;
          for (std::int64_t pc = 0; pc < n * c; ++pc) {
            const T gv = gp[pc * plane + y * w + x];
            T* dpp = dp + pc * plane;
            if (t.y0_in && t.x0_in) dpp[t.y0 * w + t.x0] += w00 * gv;
            if (t.y0_in && t.x1_in) dpp[t.y0 * w + t.x1] += w01 * gv;
            if (t.y1_in && t.x0_in) dpp[t.y1 * w + t.x0] += w10 * gv;
            if (t.y1_in && t.x1_in) dpp[t.y1 * w + t.x1] += w11 * gv;
          }
        }
      }
      sink.add(in_node, din);
    }));
  }
  return out;
}

template <typename T>
TensorT<T> occlusion_mask(const TensorT<T>& prev, const TensorT<T>& cur, const FlowField& flow,
                          T alpha) {
  require_same_shape(prev, cur, "occlusion_mask");
  const TensorT<T> warped = backward_warp<T>(nullptr, prev, flow, Border::clamp);
  const std::int64_t n = cur.size(0), c = cur.size(1), h = cur.size(2), w = cur.size(3);
  if (n != 1) throw ShapeError("occlusion_mask: expects a single frame (N == 1)");
  TensorT<T> mask({h, w});
  const T* a = cur.data().data();
  const T* b = warped.data().data();
  T* m = mask.mut().data();
  const std::int64_t plane = h * w;
  for (std::int64_t i = 0; i < plane; ++i) {
    T s = T(0);
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const T d = a[ch * plane + i] - b[ch * plane + i];
      s += d * d;
    }
    m[i] = std::exp(-alpha * std::sqrt(s));
  }
  return mask;
}

template TensorT<float> backward_warp<float>(TapeT<float>*, const TensorT<float>&, const FlowField&, Border);
template TensorT<double> backward_warp<double>(TapeT<double>*, const TensorT<double>&, const FlowField&, Border);
template TensorT<float> occlusion_mask<float>(const TensorT<float>&, const TensorT<float>&, const FlowField&, float);
template TensorT<double> occlusion_mask<double>(const TensorT<double>&, const TensorT<double>&, const FlowField&, double);

}  // namespace pseudoflow

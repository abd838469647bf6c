#include "pseudoflow/ops.hpp"

#include <Eigen/Core>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <vector>

namespace pseudoflow {

namespace {

std::atomic<bool> g_finite_checks{false};

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapRM = Eigen::Map<MatRM<T>>;
template <typename T>
using CMapRM = Eigen::Map<const MatRM<T>>;

inline std::int64_t reflect_index(std::int64_t i, std::int64_t n) {
  // reflect-101: -1 -> 1, n -> n-2
  if (i < 0) i = -i;
  if (i >= n) i = 2 * n - 2 - i;
  return i;
}

struct ConvDims {
  std::int64_t n, c, h, w;       // input
  std::int64_t oc, kh, kw;       // weight
  std::int64_t oh, ow;           // output
  int stride, pad;
  PadMode mode;
};

template <typename T>
ConvDims conv_dims(const TensorT<T>& input, const TensorT<T>& weight, const TensorT<T>& bias,
                   int stride, int pad, PadMode mode) {
  if (input.dims() != 4) throw ShapeError("conv2d: input must be NCHW, got " + shape_str(input.shape()));
  if (weight.dims() != 4) throw ShapeError("conv2d: weight must be OIkk, got " + shape_str(weight.shape()));
  ConvDims d{};
  d.n = input.size(0);
  d.c = input.size(1);
  d.h = input.size(2);
  d.w = input.size(3);
  d.oc = weight.size(0);
  d.kh = weight.size(2);
  d.kw = weight.size(3);
  d.stride = stride;
  d.pad = pad;
  d.mode = mode;
  if (weight.size(1) != d.c)
    throw ShapeError("conv2d: weight expects " + std::to_string(weight.size(1)) +
                     " input channels, input has " + std::to_string(d.c));
  if (!bias.empty() && (bias.dims() != 1 || bias.size(0) != d.oc))
    throw ShapeError("conv2d: bias must have one value per output channel");
  if (stride < 1) throw ShapeError("conv2d: stride must be >= 1");
  if (pad < 0) throw ShapeError("conv2d: pad must be >= 0");
  if (mode == PadMode::reflect && (pad > d.h - 1 || pad > d.w - 1))
    throw ShapeError("conv2d: reflect pad exceeds spatial extent");
  d.oh = (d.h + 2 * pad - d.kh) / stride + 1;
  d.ow = (d.w + 2 * pad - d.kw) / stride + 1;
  if (d.h + 2 * pad < d.kh || d.w + 2 * pad < d.kw || d.oh <= 0 || d.ow <= 0)
    throw ShapeError("conv2d: kernel " + std::to_string(d.kh) + "x" + std::to_string(d.kw) +
                     " does not fit padded input " + shape_str(input.shape()));
  return d;
}

// Gather patch source indices for one spatial plane; -1 means zero padding.
void fill_patch_indices(const ConvDims& d, std::vector<std::int64_t>& idx) {
  const std::int64_t np = d.oh * d.ow;
  idx.resize(static_cast<std::size_t>(d.kh * d.kw * np));
  std::size_t k = 0;
  for (std::int64_t ky = 0; ky < d.kh; ++ky) {
    for (std::int64_t kx = 0; kx < d.kw; ++kx) {
      for (std::int64_t oy = 0; oy < d.oh; ++oy) {
        const std::int64_t iy = oy * d.stride - d.pad + ky;
        for (std::int64_t ox = 0; ox < d.ow; ++ox) {
          const std::int64_t ix = ox * d.stride - d.pad + kx;
          std::int64_t sy = iy, sx = ix;
          if (d.mode == PadMode::reflect) {
            sy = reflect_index(sy, d.h);
            sx = reflect_index(sx, d.w);
            idx[k++] = sy * d.w + sx;
          } else {
            idx[k++] = (sy < 0 || sy >= d.h || sx < 0 || sx >= d.w) ? -1 : sy * d.w + sx;
          }
        }
      }
    }
  }
}

// cols is (C*kh*kw) x (oh*ow), row-major.
template <typename T>
void im2col(const ConvDims& d, const T* plane0, const std::vector<std::int64_t>& idx, T* cols) {
  const std::int64_t np = d.oh * d.ow;
  const std::int64_t kk = d.kh * d.kw;
  for (std::int64_t c = 0; c < d.c; ++c) {
    const T* src = plane0 + c * d.h * d.w;
    T* dst = cols + c * kk * np;
    for (std::int64_t i = 0; i < kk * np; ++i) {
      const std::int64_t s = idx[static_cast<std::size_t>(i)];
      dst[i] = s < 0 ? T(0) : src[s];
    }
  }
}

template <typename T>
void col2im_add(const ConvDims& d, const T* cols, const std::vector<std::int64_t>& idx, T* plane0) {
  const std::int64_t np = d.oh * d.ow;
  const std::int64_t kk = d.kh * d.kw;
  for (std::int64_t c = 0; c < d.c; ++c) {
    T* dst = plane0 + c * d.h * d.w;
    const T* src = cols + c * kk * np;
    for (std::int64_t i = 0; i < kk * np; ++i) {
      const std::int64_t s = idx[static_cast<std::size_t>(i)];
      if (s >= 0) dst[s] += src[i];
    }
  }
}

template <typename T>
bool want_grad(const TensorT<T>& t) {
  return t.node() >= 0;
}

template <typename T, typename... Ts>
bool any_on_tape(const TensorT<T>& t, const Ts&... rest) {
  if constexpr (sizeof...(rest) == 0) return want_grad(t);
  else return want_grad(t) || any_on_tape(rest...);
}

}  // namespace

void set_finite_checks(bool enabled) { g_finite_checks.store(enabled, std::memory_order_relaxed); }
bool finite_checks_enabled() { return g_finite_checks.load(std::memory_order_relaxed); }

namespace detail {
template <typename T>
void check_finite(const TensorT<T>& t, const char* op) {
  if (!finite_checks_enabled()) return;
  if (!t.all_finite()) throw NumericError(std::string("non-finite values produced by ") + op);
}
template void check_finite<float>(const TensorT<float>&, const char*);
template void check_finite<double>(const TensorT<double>&, const char*);
}  // namespace detail

template <typename T>
TensorT<T> conv2d(TapeT<T>* tape, const TensorT<T>& input, const TensorT<T>& weight,
                  const TensorT<T>& bias, int stride, int pad, PadMode mode) {
  const ConvDims d = conv_dims(input, weight, bias, stride, pad, mode);
  const std::int64_t np = d.oh * d.ow;
  const std::int64_t kdim = d.c * d.kh * d.kw;

  std::vector<std::int64_t> idx;
  fill_patch_indices(d, idx);
  AlignedVec<T> cols(static_cast<std::size_t>(kdim * np));

  TensorT<T> out({d.n, d.oc, d.oh, d.ow});
  const T* in_ptr = input.data().data();
  T* out_ptr = out.mut().data();
  CMapRM<T> wmat(weight.data().data(), d.oc, kdim);

  for (std::int64_t n = 0; n < d.n; ++n) {
    im2col(d, in_ptr + n * d.c * d.h * d.w, idx, cols.data());
    CMapRM<T> cmat(cols.data(), kdim, np);
    MapRM<T> omat(out_ptr + n * d.oc * np, d.oc, np);
    omat.noalias() = wmat * cmat;
    if (!bias.empty()) {
      const T* b = bias.data().data();
      for (std::int64_t o = 0; o < d.oc; ++o) omat.row(o).array() += b[o];
    }
  }
  detail::check_finite(out, "conv2d");

  const bool bias_grad = !bias.empty() && want_grad(bias);
  if (tape && (want_grad(input) || want_grad(weight) || bias_grad)) {
    const int in_node = input.node(), w_node = weight.node(), b_node = bias_grad ? bias.node() : -1;
    TensorT<T> in_saved = input, w_saved = weight;
    out.set_node(tape->record({in_node, w_node, b_node}, [=](const TensorT<T>& g, GradSinkT<T>& sink) {
      const std::int64_t np_ = d.oh * d.ow;
      const std::int64_t kdim_ = d.c * d.kh * d.kw;
      std::vector<std::int64_t> idx_;
      fill_patch_indices(d, idx_);
      AlignedVec<T> cols_(static_cast<std::size_t>(kdim_ * np_));
      const T* gp = g.data().data();
      CMapRM<T> wmat_(w_saved.data().data(), d.oc, kdim_);

      TensorT<T> dw, din;
      if (w_node >= 0) dw = TensorT<T>::zeros(w_saved.shape());
      if (in_node >= 0) din = TensorT<T>::zeros(in_saved.shape());
      AlignedVec<T> dcols(static_cast<std::size_t>(kdim_ * np_));

      for (std::int64_t n = 0; n < d.n; ++n) {
        CMapRM<T> gmat(gp + n * d.oc * np_, d.oc, np_);
        if (w_node >= 0) {
          im2col(d, in_saved.data().data() + n * d.c * d.h * d.w, idx_, cols_.data());
          CMapRM<T> cmat(cols_.data(), kdim_, np_);
          MapRM<T> dwm(dw.mut().data(), d.oc, kdim_);
          dwm.noalias() += gmat * cmat.transpose();
        }
        if (in_node >= 0) {
          MapRM<T> dcm(dcols.data(), kdim_, np_);
          dcm.noalias() = wmat_.transpose() * gmat;
          col2im_add(d, dcols.data(), idx_, din.mut().data() + n * d.c * d.h * d.w);
        }
      }
      if (b_node >= 0) {
        TensorT<T> db({d.oc});
        auto dbm = db.mut();
        for (std::int64_t n = 0; n < d.n; ++n) {
          CMapRM<T> gmat(gp + n * d.oc * np_, d.oc, np_);
          for (std::int64_t o = 0; o < d.oc; ++o) dbm[static_cast<std::size_t>(o)] += gmat.row(o).sum();
        }
        sink.add(b_node, db);
      }
      if (w_node >= 0) sink.add(w_node, dw);
      if (in_node >= 0) sink.add(in_node, din);
    }));
  }
  return out;
}

template <typename T>
TensorT<T> upsample_nearest2x(TapeT<T>* tape, const TensorT<T>& input) {
  if (input.dims() != 4) throw ShapeError("upsample_nearest2x: input must be NCHW");
  const std::int64_t n = input.size(0), c = input.size(1), h = input.size(2), w = input.size(3);
  TensorT<T> out({n, c, 2 * h, 2 * w});
  const T* src = input.data().data();
  T* dst = out.mut().data();
  for (std::int64_t p = 0; p < n * c; ++p) {
    const T* sp = src + p * h * w;
    T* dp = dst + p * 4 * h * w;
    for (std::int64_t y = 0; y < 2 * h; ++y) {
      const T* row = sp + (y / 2) * w;
      T* drow = dp + y * 2 * w;
      for (std::int64_t x = 0; x < 2 * w; ++x) drow[x] = row[x / 2];
    }
  }
  detail::check_finite(out, "upsample_nearest2x");

  if (tape && want_grad(input)) {
    const int in_node = input.node();
    const Shape in_shape = input.shape();
    out.set_node(tape->record({in_node}, [=](const TensorT<T>& g, GradSinkT<T>& sink) {
      TensorT<T> din(in_shape);
      const T* gp = g.data().data();
      T* dp = din.mut().data();
      for (std::int64_t p = 0; p < n * c; ++p) {
        const T* gpp = gp + p * 4 * h * w;
        T* dpp = dp + p * h * w;
        for (std::int64_t y = 0; y < 2 * h; ++y)
          for (std::int64_t x = 0; x < 2 * w; ++x) dpp[(y / 2) * w + (x / 2)] += gpp[y * 2 * w + x];
      }
      sink.add(in_node, din);
    }));
  }
  return out;
}

template <typename T>
TensorT<T> upsample_conv(TapeT<T>* tape, const TensorT<T>& input, const TensorT<T>& weight,
                         const TensorT<T>& bias, int pad, PadMode mode) {
  return conv2d(tape, upsample_nearest2x(tape, input), weight, bias, 1, pad, mode);
}

namespace {

// Shared scaffolding for unary elementwise ops.
template <typename T, typename Fwd, typename Bwd>
TensorT<T> unary_op(TapeT<T>* tape, const TensorT<T>& a, const char* name, Fwd fwd, Bwd bwd_factory) {
  TensorT<T> out(a.shape());
  const auto src = a.data();
  auto dst = out.mut();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = fwd(src[i]);
  detail::check_finite(out, name);
  if (tape && want_grad(a)) {
    const int a_node = a.node();
    auto bwd = bwd_factory(a, out);
    out.set_node(tape->record({a_node}, [=](const TensorT<T>& g, GradSinkT<T>& sink) {
      TensorT<T> da(g.shape());
      const auto gp = g.data();
      auto dp = da.mut();
      for (std::size_t i = 0; i < gp.size(); ++i) dp[i] = bwd(i, gp[i]);
      sink.add(a_node, da);
    }));
  }
  return out;
}

}  // namespace

template <typename T>
TensorT<T> relu(TapeT<T>* tape, const TensorT<T>& a) {
  return unary_op(
      tape, a, "relu", [](T x) { return x > T(0) ? x : T(0); },
      [](const TensorT<T>& in, const TensorT<T>&) {
        return [in](std::size_t i, T g) { return in[static_cast<std::int64_t>(i)] > T(0) ? g : T(0); };
      });
}

template <typename T>
TensorT<T> leaky_relu(TapeT<T>* tape, const TensorT<T>& a, T slope) {
  return unary_op(
      tape, a, "leaky_relu", [slope](T x) { return x > T(0) ? x : slope * x; },
      [slope](const TensorT<T>& in, const TensorT<T>&) {
        return [in, slope](std::size_t i, T g) {
          return in[static_cast<std::int64_t>(i)] > T(0) ? g : slope * g;
        };
      });
}

template <typename T>
TensorT<T> tanh_op(TapeT<T>* tape, const TensorT<T>& a) {
  return unary_op(
      tape, a, "tanh", [](T x) { return std::tanh(x); },
      [](const TensorT<T>&, const TensorT<T>& out) {
        return [out](std::size_t i, T g) {
          const T y = out[static_cast<std::int64_t>(i)];
          return (T(1) - y * y) * g;
        };
      });
}

template <typename T>
TensorT<T> sigmoid_op(TapeT<T>* tape, const TensorT<T>& a) {
  auto sig = [](T x) {
    if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
    const T e = std::exp(x);
    return e / (T(1) + e);
  };
  return unary_op(
      tape, a, "sigmoid", sig,
      [](const TensorT<T>&, const TensorT<T>& out) {
        return [out](std::size_t i, T g) {
          const T y = out[static_cast<std::int64_t>(i)];
          return y * (T(1) - y) * g;
        };
      });
}

namespace {

enum class BinKind { add, sub, mul };

template <typename T>
TensorT<T> binary_op(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b, BinKind kind) {
  const bool a_scalar = a.numel() == 1, b_scalar = b.numel() == 1;
  if (!a.same_shape(b) && !a_scalar && !b_scalar)
    throw ShapeError("elementwise op: incompatible shapes " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()) + " (only scalar broadcast supported)");
  const TensorT<T>& big = b_scalar && !a_scalar ? a : (a_scalar && !b_scalar ? b : a);
  TensorT<T> out(big.shape());
  const auto ap = a.data();
  const auto bp = b.data();
  auto op = out.mut();
  const std::size_t n = op.size();
  const std::size_t amask = a_scalar && n > 1 ? 0 : ~std::size_t(0);
  const std::size_t bmask = b_scalar && n > 1 ? 0 : ~std::size_t(0);
  switch (kind) {
    case BinKind::add:
      for (std::size_t i = 0; i < n; ++i) op[i] = ap[i & amask] + bp[i & bmask];
      break;
    case BinKind::sub:
      for (std::size_t i = 0; i < n; ++i) op[i] = ap[i & amask] - bp[i & bmask];
      break;
    case BinKind::mul:
      for (std::size_t i = 0; i < n; ++i) op[i] = ap[i & amask] * bp[i & bmask];
      break;
  }
  detail::check_finite(out, "elementwise");

  if (tape && any_on_tape(a, b)) {
    const int an = a.node(), bn = b.node();
    TensorT<T> a_saved = a, b_saved = b;
    auto reduce_to = [](const TensorT<T>& g, const auto& weight_fn, bool to_scalar, const Shape& shape) {
      if (!to_scalar) {
        TensorT<T> r(shape);
        auto rp = r.mut();
        const auto gp = g.data();
        for (std::size_t i = 0; i < rp.size(); ++i) rp[i] = weight_fn(i, gp[i]);
        return r;
      }
      T acc = T(0);
      const auto gp = g.data();
      for (std::size_t i = 0; i < gp.size(); ++i) acc += weight_fn(i, gp[i]);
      TensorT<T> r(shape);
      r[0] = acc;
      return r;
    };
    out.set_node(tape->record({an, bn}, [=](const TensorT<T>& g, GradSinkT<T>& sink) {
      const std::size_t nn = static_cast<std::size_t>(g.numel());
      if (an >= 0) {
        const bool bc = a_saved.numel() == 1 && nn > 1;
        if (kind == BinKind::mul) {
          sink.add(an, reduce_to(
                           g, [&](std::size_t i, T gv) { return gv * b_saved[static_cast<std::int64_t>(i & bmask)]; },
                           bc, a_saved.shape()));
        } else {
          sink.add(an, reduce_to(g, [](std::size_t, T gv) { return gv; }, bc, a_saved.shape()));
        }
      }
      if (bn >= 0) {
        const bool bc = b_saved.numel() == 1 && nn > 1;
        switch (kind) {
          case BinKind::add:
            sink.add(bn, reduce_to(g, [](std::size_t, T gv) { return gv; }, bc, b_saved.shape()));
            break;
          case BinKind::sub:
            sink.add(bn, reduce_to(g, [](std::size_t, T gv) { return -gv; }, bc, b_saved.shape()));
            break;
          case BinKind::mul:
            sink.add(bn, reduce_to(
                             g, [&](std::size_t i, T gv) { return gv * a_saved[static_cast<std::int64_t>(i & amask)]; },
                             bc, b_saved.shape()));
            break;
        }
      }
    }));
  }
  return out;
}

}  // namespace

template <typename T>
TensorT<T> add(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b) {
  return binary_op(tape, a, b, BinKind::add);
}
template <typename T>
TensorT<T> sub(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b) {
  return binary_op(tape, a, b, BinKind::sub);
}
template <typename T>
TensorT<T> mul(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b) {
  return binary_op(tape, a, b, BinKind::mul);
}

template <typename T>
TensorT<T> scale(TapeT<T>* tape, const TensorT<T>& a, T s) {
  return unary_op(
      tape, a, "scale", [s](T x) { return s * x; },
      [s](const TensorT<T>&, const TensorT<T>&) {
        return [s](std::size_t, T g) { return s * g; };
      });
}

template <typename T>
TensorT<T> clamp_unit(TapeT<T>* tape, const TensorT<T>& a) {
  return unary_op(
      tape, a, "clamp_unit", [](T x) { return x < T(-1) ? T(-1) : (x > T(1) ? T(1) : x); },
      [](const TensorT<T>& in, const TensorT<T>&) {
        return [in](std::size_t i, T g) {
          const T x = in[static_cast<std::int64_t>(i)];
          return (x >= T(-1) && x <= T(1)) ? g : T(0);
        };
      });
}

template <typename T>
TensorT<T> instance_norm(TapeT<T>* tape, const TensorT<T>& input, const TensorT<T>& gain,
                         const TensorT<T>& bias, T eps) {
  if (input.dims() != 4) throw ShapeError("instance_norm: input must be NCHW");
  const std::int64_t n = input.size(0), c = input.size(1), h = input.size(2), w = input.size(3);
  const std::int64_t m = h * w;
  if (m < 2) throw ShapeError("instance_norm: needs at least 2 spatial elements");
  if (gain.numel() != c || bias.numel() != c)
    throw ShapeError("instance_norm: gain/bias must have one value per channel");

  TensorT<T> out(input.shape());
  TensorT<T> xhat(input.shape());
  std::vector<T> invstd(static_cast<std::size_t>(n * c));
  const T* in = input.data().data();
  const T* gp = gain.data().data();
  const T* bp = bias.data().data();
  T* op = out.mut().data();
  T* xh = xhat.mut().data();

  for (std::int64_t p = 0; p < n * c; ++p) {
    const T* x = in + p * m;
    T mean = T(0);
    for (std::int64_t i = 0; i < m; ++i) mean += x[i];
    mean /= static_cast<T>(m);
    T var = T(0);
    for (std::int64_t i = 0; i < m; ++i) {
      const T d = x[i] - mean;
      var += d * d;
    }
    var /= static_cast<T>(m);
    const T is = T(1) / std::sqrt(var + eps);
    invstd[static_cast<std::size_t>(p)] = is;
    const T gch = gp[p % c], bch = bp[p % c];
    T* o = op + p * m;
    T* xhp = xh + p * m;
    for (std::int64_t i = 0; i < m; ++i) {
      xhp[i] = (x[i] - mean) * is;
      o[i] = gch * xhp[i] + bch;
    }
  }
  detail::check_finite(out, "instance_norm");

  if (tape && any_on_tape(input, gain, bias)) {
    const int in_node = input.node(), g_node = gain.node(), b_node = bias.node();
    TensorT<T> gain_saved = gain;
    out.set_node(tape->record({in_node, g_node, b_node}, [=](const TensorT<T>& g, GradSinkT<T>& sink) {
      const T* gg = g.data().data();
      const T* xhp = xhat.data().data();
      if (b_node >= 0) {
        TensorT<T> db({c});
        auto d = db.mut();
        for (std::int64_t p = 0; p < n * c; ++p)
          for (std::int64_t i = 0; i < m; ++i) d[static_cast<std::size_t>(p % c)] += gg[p * m + i];
        sink.add(b_node, db);
      }
      if (g_node >= 0) {
        TensorT<T> dg({c});
        auto d = dg.mut();
        for (std::int64_t p = 0; p < n * c; ++p)
          for (std::int64_t i = 0; i < m; ++i)
            d[static_cast<std::size_t>(p % c)] += gg[p * m + i] * xhp[p * m + i];
        sink.add(g_node, dg);
      }
      if (in_node >= 0) {
        TensorT<T> din(g.shape());
        T* d = din.mut().data();
        const T* gch = gain_saved.data().data();
        for (std::int64_t p = 0; p < n * c; ++p) {
          const T* gv = gg + p * m;
          const T* xv = xhp + p * m;
          T gmean = T(0), gxmean = T(0);
          for (std::int64_t i = 0; i < m; ++i) {
            gmean += gv[i];
            gxmean += gv[i] * xv[i];
          }
          gmean /= static_cast<T>(m);
          gxmean /= static_cast<T>(m);
          const T k = gch[p % c] * invstd[static_cast<std::size_t>(p)];
          T* dv = d + p * m;
          for (std::int64_t i = 0; i < m; ++i) dv[i] = k * (gv[i] - gmean - xv[i] * gxmean);
        }
        sink.add(in_node, din);
      }
    }));
  }
  return out;
}

template <typename T>
TensorT<T> mean_all(TapeT<T>* tape, const TensorT<T>& a) {
  if (a.empty()) throw ShapeError("mean_all: empty tensor");
  T acc = T(0);
  for (const T x : a.data()) acc += x;
  TensorT<T> out = TensorT<T>::scalar(acc / static_cast<T>(a.numel()));
  detail::check_finite(out, "mean");
  if (tape && want_grad(a)) {
    const int an = a.node();
    const Shape sh = a.shape();
    const T inv = T(1) / static_cast<T>(a.numel());
    out.set_node(tape->record({an}, [=](const TensorT<T>& g, GradSinkT<T>& sink) {
      sink.add(an, TensorT<T>::full(sh, g.item() * inv));
    }));
  }
  return out;
}

template <typename T>
TensorT<T> l1_distance(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b) {
  require_same_shape(a, b, "l1_distance");
  const auto ap = a.data(), bp = b.data();
  T acc = T(0);
  for (std::size_t i = 0; i < ap.size(); ++i) acc += std::abs(ap[i] - bp[i]);
  TensorT<T> out = TensorT<T>::scalar(acc / static_cast<T>(a.numel()));
  detail::check_finite(out, "l1_distance");
  if (tape && any_on_tape(a, b)) {
    const int an = a.node(), bn = b.node();
    TensorT<T> a_saved = a, b_saved = b;
    const T inv = T(1) / static_cast<T>(a.numel());
    out.set_node(tape->record({an, bn}, [=](const TensorT<T>& g, GradSinkT<T>& sink) {
      const T go = g.item() * inv;
      TensorT<T> da(a_saved.shape());
      auto dp = da.mut();
      const auto av = a_saved.data(), bv = b_saved.data();
      for (std::size_t i = 0; i < dp.size(); ++i) {
        const T d = av[i] - bv[i];
        dp[i] = d > T(0) ? go : (d < T(0) ? -go : T(0));
      }
      if (an >= 0) sink.add(an, da);
      if (bn >= 0) {
        TensorT<T> db(b_saved.shape());
        auto dbp = db.mut();
        const auto dap = da.data();
        for (std::size_t i = 0; i < dbp.size(); ++i) dbp[i] = -dap[i];
        sink.add(bn, db);
      }
    }));
  }
  return out;
}

template <typename T>
TensorT<T> bce_with_logits(TapeT<T>* tape, const TensorT<T>& logits, const TensorT<T>& targets) {
  require_same_shape(logits, targets, "bce_with_logits");
  const auto xp = logits.data(), tp = targets.data();
  T acc = T(0);
  for (std::size_t i = 0; i < xp.size(); ++i) {
    const T x = xp[i], t = tp[i];
    acc += std::max(x, T(0)) - x * t + std::log1p(std::exp(-std::abs(x)));
  }
  TensorT<T> out = TensorT<T>::scalar(acc / static_cast<T>(logits.numel()));
  detail::check_finite(out, "bce_with_logits");
  if (tape && any_on_tape(logits, targets)) {
    const int xn = logits.node(), tn = targets.node();
    TensorT<T> x_saved = logits, t_saved = targets;
    const T inv = T(1) / static_cast<T>(logits.numel());
    out.set_node(tape->record({xn, tn}, [=](const TensorT<T>& g, GradSinkT<T>& sink) {
      const T go = g.item() * inv;
      const auto xv = x_saved.data(), tv = t_saved.data();
      if (xn >= 0) {
        TensorT<T> dx(x_saved.shape());
        auto dp = dx.mut();
        for (std::size_t i = 0; i < dp.size(); ++i) {
          const T x = xv[i];
          const T sig = x >= T(0) ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
          dp[i] = (sig - tv[i]) * go;
        }
        sink.add(xn, dx);
      }
      if (tn >= 0) {
        TensorT<T> dt(t_saved.shape());
        auto dp = dt.mut();
        for (std::size_t i = 0; i < dp.size(); ++i) dp[i] = -xv[i] * go;
        sink.add(tn, dt);
      }
    }));
  }
  return out;
}

#define PSEUDOFLOW_INSTANTIATE_OPS(T)                                                               \
  template TensorT<T> conv2d<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&, const TensorT<T>&, \
                                int, int, PadMode);                                                 \
  template TensorT<T> upsample_nearest2x<T>(TapeT<T>*, const TensorT<T>&);                          \
  template TensorT<T> upsample_conv<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&,             \
                                       const TensorT<T>&, int, PadMode);                            \
  template TensorT<T> relu<T>(TapeT<T>*, const TensorT<T>&);                                        \
  template TensorT<T> leaky_relu<T>(TapeT<T>*, const TensorT<T>&, T);                               \
  template TensorT<T> tanh_op<T>(TapeT<T>*, const TensorT<T>&);                                     \
  template TensorT<T> sigmoid_op<T>(TapeT<T>*, const TensorT<T>&);                                  \
  template TensorT<T> add<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&);                      \
  template TensorT<T> sub<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&);                      \
  template TensorT<T> mul<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&);                      \
  template TensorT<T> scale<T>(TapeT<T>*, const TensorT<T>&, T);                                    \
  template TensorT<T> clamp_unit<T>(TapeT<T>*, const TensorT<T>&);                                  \
  template TensorT<T> instance_norm<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&,             \
                                       const TensorT<T>&, T);                                       \
  template TensorT<T> mean_all<T>(TapeT<T>*, const TensorT<T>&);                                    \
  template TensorT<T> l1_distance<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&);              \
  template TensorT<T> bce_with_logits<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&);

PSEUDOFLOW_INSTANTIATE_OPS(float)
PSEUDOFLOW_INSTANTIATE_OPS(double)

#undef PSEUDOFLOW_INSTANTIATE_OPS

}  // namespace pseudoflow

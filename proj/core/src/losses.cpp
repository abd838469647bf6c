#include "pseudoflow/losses.hpp"

#include "pseudoflow/warp.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace pseudoflow {

namespace {

template <typename T>
TensorT<T> squared_error_to_const(TapeT<T>* tape, const TensorT<T>& x, T target) {
  TensorT<T> c = TensorT<T>::full(x.shape(), target);
  TensorT<T> d = sub(tape, x, c);
  return mean_all(tape, mul(tape, d, d));
}

template <typename T>
void check_flow_identity(const FlowDraw& flow) {
  if (!flow.real || !flow.translated) throw ConfigError("loss: flow draw is empty");
  if (!flow.wrong_pair && !flow.matched())
    throw ConfigError("loss: real and translated warps must share one flow field instance "
                      "outside the wrong_pair ablation");
}

// The two warps inside one consistency term. `real_future` is a constant
// (data warped with optional noise); `fake_future` stays on the tape.
template <typename T>
struct FuturePair {
  TensorT<T> real_future;
  TensorT<T> fake_future;
};

template <typename T>
TensorT<T> draw_delta(const Shape& shape, const NoiseSpec& noise, Rng& rng) {
  const double sigma = rng.uniform(noise.sigma_low, noise.sigma_high);
  TensorT<T> d(shape);
  for (auto& v : d.mut()) v = static_cast<T>(rng.normal(0.0, sigma));
  return d;
}

template <typename T>
TensorT<T> warp_with_delta(TapeT<T>* tape, const TensorT<T>& img, const FlowField& flow,
                           const TensorT<T>* delta) {
  TensorT<T> warped = backward_warp(tape, img, flow, Border::clamp);
  if (!delta) return warped;
  return clamp_unit(tape, add(tape, warped, *delta));
}

template <typename T>
FuturePair<T> make_future_pair(TapeT<T>* tape, const TensorT<T>& real_img,
                               const TensorT<T>& fake_img, const FlowDraw& flow,
                               const NoiseSpec& noise, Rng& rng) {
  FuturePair<T> p;
  if (!noise.active()) {
    p.real_future = warp_with_delta<T>(nullptr, real_img, *flow.real, nullptr);
    p.fake_future = warp_with_delta<T>(tape, fake_img, *flow.translated, nullptr);
    return p;
  }
  const TensorT<T> delta_real = draw_delta<T>(real_img.shape(), noise, rng);
  p.real_future = warp_with_delta<T>(nullptr, real_img, *flow.real, &delta_real);
  if (noise.sharing == NoiseSharing::shared) {
    p.fake_future = warp_with_delta<T>(tape, fake_img, *flow.translated, &delta_real);
  } else {
    const TensorT<T> delta_fake = draw_delta<T>(fake_img.shape(), noise, rng);
    p.fake_future = warp_with_delta<T>(tape, fake_img, *flow.translated, &delta_fake);
  }
  return p;
}

template <typename T>
TensorT<T> add_opt(TapeT<T>* tape, std::optional<TensorT<T>>& acc, const TensorT<T>& term) {
  if (!acc) return term;
  return add(tape, *acc, term);
}

template <typename T>
TensorT<T> sum_or_zero(std::optional<TensorT<T>>& acc) {
  if (acc) return *acc;
  return TensorT<T>::scalar(T(0));
}

// Luma projection (Rec.601 for 3 channels, channel mean otherwise) followed
// by a normalized 5x5 sigma-2 gaussian blur; both run through conv2d with
// constant weights so gradients flow into the translated image.
template <typename T>
TensorT<T> blurred_luma(TapeT<T>* tape, const TensorT<T>& img) {
  const std::int64_t c = img.size(1);
  TensorT<T> lw({1, c, 1, 1});
  if (c == 3) {
    lw[0] = T(0.299);
    lw[1] = T(0.587);
    lw[2] = T(0.114);
  } else {
    for (std::int64_t i = 0; i < c; ++i) lw[i] = T(1) / static_cast<T>(c);
  }
  TensorT<T> luma = conv2d(tape, img, lw, TensorT<T>(), 1, 0, PadMode::zero);

  TensorT<T> g({1, 1, 5, 5});
  T sum = T(0);
  for (int y = -2; y <= 2; ++y)
    for (int x = -2; x <= 2; ++x) {
      const T v = std::exp(T(-(x * x + y * y)) / T(2 * 2 * 2));
      g[(y + 2) * 5 + (x + 2)] = v;
      sum += v;
    }
  for (std::int64_t i = 0; i < g.numel(); ++i) g[i] = g[i] / sum;
  return conv2d(tape, luma, g, TensorT<T>(), 1, 2, PadMode::reflect);
}

}  // namespace

void LossWeights::validate() const {
  if (lambda_ur < 0 || lambda_us < 0 || lambda_cyc < 0 || lambda_cont < 0)
    throw ConfigError("loss weights must be >= 0");
}

void SuppressionFlags::validate() const {
  if (suppress_x_domain && suppress_y_domain)
    throw ConfigError("at most one domain may be suppressed");
}

std::string LossBreakdown::csv_header() {
  return "iteration,draw_seed,adv_g,adv_d_x,adv_d_y,ur_x,ur_y,us_y,us_x,cyc,cont,total_g";
}

std::string LossBreakdown::csv_row() const {
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  auto opt = [&](const std::optional<double>& v) { return v ? num(*v) : std::string(); };
  std::ostringstream os;
  os << iteration << ',' << draw_seed << ',' << num(adv_g) << ',' << num(adv_d_x) << ','
     << num(adv_d_y) << ',' << opt(ur_x) << ',' << opt(ur_y) << ',' << opt(us_y) << ','
     << opt(us_x) << ',' << opt(cyc) << ',' << opt(cont) << ',' << num(total_g);
  return os.str();
}

template <typename T>
TensorT<T> adversarial_terms(TapeT<T>* tape, const TensorT<T>& d_real, const TensorT<T>& d_fake,
                             AdvSide side, AdvForm form) {
  if (side == AdvSide::discriminator) {
    if (d_real.empty()) throw ShapeError("adversarial_terms: discriminator side needs real logits");
    if (form == AdvForm::least_squares) {
      return add(tape, squared_error_to_const(tape, d_real, T(1)),
                 squared_error_to_const(tape, d_fake, T(0)));
    }
    TensorT<T> ones = TensorT<T>::ones(d_real.shape());
    TensorT<T> zeros = TensorT<T>::zeros(d_fake.shape());
    return add(tape, bce_with_logits(tape, d_real, ones), bce_with_logits(tape, d_fake, zeros));
  }
  switch (form) {
    case AdvForm::minimax: {
      TensorT<T> zeros = TensorT<T>::zeros(d_fake.shape());
      return scale(tape, bce_with_logits(tape, d_fake, zeros), T(-1));
    }
    case AdvForm::nonsaturating: {
      TensorT<T> ones = TensorT<T>::ones(d_fake.shape());
      return bce_with_logits(tape, d_fake, ones);
    }
    case AdvForm::least_squares:
      return squared_error_to_const(tape, d_fake, T(1));
  }
  throw ConfigError("unknown adversarial form");
}

template <typename T>
TensorT<T> unsupervised_recycle_loss(TapeT<T>* tape, const TensorT<T>& x_t, const TensorT<T>& y_s,
                                     const NetworkT<T>& gx, const NetworkT<T>& gy,
                                     const FlowDraw& flow, const NoiseSpec& noise,
                                     const SuppressionFlags& flags, Rng& rng) {
  flags.validate();
  check_flow_identity<T>(flow);
  std::optional<TensorT<T>> acc;
  if (!flags.suppress_x_domain) {
    const FuturePair<T> px = make_future_pair(tape, x_t, gy.forward(x_t, tape), flow, noise, rng);
    acc = add_opt(tape, acc, l1_distance(tape, px.real_future, gx.forward(px.fake_future, tape)));
  }
  if (!flags.suppress_y_domain) {
    const FuturePair<T> py = make_future_pair(tape, y_s, gx.forward(y_s, tape), flow, noise, rng);
    acc = add_opt(tape, acc, l1_distance(tape, py.real_future, gy.forward(py.fake_future, tape)));
  }
  return sum_or_zero(acc);
}

template <typename T>
TensorT<T> unsupervised_spatial_loss(TapeT<T>* tape, const TensorT<T>& x_t, const TensorT<T>& y_s,
                                     const NetworkT<T>& gx, const NetworkT<T>& gy,
                                     const FlowDraw& flow, const NoiseSpec& noise,
                                     const SuppressionFlags& flags, Rng& rng) {
  flags.validate();
  check_flow_identity<T>(flow);
  std::optional<TensorT<T>> acc;
  if (!flags.suppress_y_domain) {
    const FuturePair<T> px = make_future_pair(tape, x_t, gy.forward(x_t, tape), flow, noise, rng);
    acc = add_opt(tape, acc, l1_distance(tape, gy.forward(px.real_future, tape), px.fake_future));
  }
  if (!flags.suppress_x_domain) {
    const FuturePair<T> py = make_future_pair(tape, y_s, gx.forward(y_s, tape), flow, noise, rng);
    acc = add_opt(tape, acc, l1_distance(tape, gx.forward(py.real_future, tape), py.fake_future));
  }
  return sum_or_zero(acc);
}

template <typename T>
TensorT<T> cycle_loss(TapeT<T>* tape, const TensorT<T>& x_t, const TensorT<T>& y_s,
                      const NetworkT<T>& gx, const NetworkT<T>& gy) {
  TensorT<T> back_x = gx.forward(gy.forward(x_t, tape), tape);
  TensorT<T> back_y = gy.forward(gx.forward(y_s, tape), tape);
  return add(tape, l1_distance(tape, back_x, x_t), l1_distance(tape, back_y, y_s));
}

template <typename T>
TensorT<T> content_loss(TapeT<T>* tape, const TensorT<T>& x, const TensorT<T>& translated) {
  return l1_distance(tape, blurred_luma(tape, x), blurred_luma(tape, translated));
}

template <typename T>
ObjectiveT<T> total_objective(TapeT<T>* tape, const TensorT<T>& batch_x, const TensorT<T>& batch_y,
                              const NetworkT<T>& gx, const NetworkT<T>& gy, const NetworkT<T>& dx,
                              const NetworkT<T>& dy, const FlowDraw& flow,
                              const LossWeights& weights, const NoiseSpec& noise,
                              const SuppressionFlags& flags, AdvForm form, Rng& rng) {
  weights.validate();
  flags.validate();
  check_flow_identity<T>(flow);

  ObjectiveT<T> result;
  LossBreakdown& bd = result.breakdown;

  result.fake_y = gy.forward(batch_x, tape);
  result.fake_x = gx.forward(batch_y, tape);

  TensorT<T> adv = add(tape,
                       adversarial_terms(tape, TensorT<T>(), dy.forward(result.fake_y, tape),
                                         AdvSide::generator, form),
                       adversarial_terms(tape, TensorT<T>(), dx.forward(result.fake_x, tape),
                                         AdvSide::generator, form));
  bd.adv_g = static_cast<double>(adv.item());
  TensorT<T> total = adv;

  const bool want_ur = weights.lambda_ur > 0;
  const bool want_us = weights.lambda_us > 0;
  if (want_ur || want_us) {
    // One pair of warped futures per domain feeds both losses, so the
    // recycle and spatial terms see identical motion and noise.
    std::optional<FuturePair<T>> px, py;
    px = make_future_pair(tape, batch_x, result.fake_y, flow, noise, rng);
    py = make_future_pair(tape, batch_y, result.fake_x, flow, noise, rng);

    if (want_ur) {
      std::optional<TensorT<T>> ur;
      if (!flags.suppress_x_domain) {
        TensorT<T> t = l1_distance(tape, px->real_future, gx.forward(px->fake_future, tape));
        bd.ur_x = static_cast<double>(t.item());
        ur = add_opt(tape, ur, t);
      }
      if (!flags.suppress_y_domain) {
        TensorT<T> t = l1_distance(tape, py->real_future, gy.forward(py->fake_future, tape));
        bd.ur_y = static_cast<double>(t.item());
        ur = add_opt(tape, ur, t);
      }
      if (ur) total = add(tape, total, scale(tape, *ur, static_cast<T>(weights.lambda_ur)));
    }
    if (want_us) {
      std::optional<TensorT<T>> us;
      if (!flags.suppress_y_domain) {
        TensorT<T> t = l1_distance(tape, gy.forward(px->real_future, tape), px->fake_future);
        bd.us_y = static_cast<double>(t.item());
        us = add_opt(tape, us, t);
      }
      if (!flags.suppress_x_domain) {
        TensorT<T> t = l1_distance(tape, gx.forward(py->real_future, tape), py->fake_future);
        bd.us_x = static_cast<double>(t.item());
        us = add_opt(tape, us, t);
      }
      if (us) total = add(tape, total, scale(tape, *us, static_cast<T>(weights.lambda_us)));
    }
  }

  if (weights.lambda_cyc > 0) {
    TensorT<T> cyc = cycle_loss(tape, batch_x, batch_y, gx, gy);
    bd.cyc = static_cast<double>(cyc.item());
    total = add(tape, total, scale(tape, cyc, static_cast<T>(weights.lambda_cyc)));
  }
  if (weights.lambda_cont > 0) {
    TensorT<T> cont = add(tape, content_loss(tape, batch_x, result.fake_y),
                          content_loss(tape, batch_y, result.fake_x));
    bd.cont = static_cast<double>(cont.item());
    total = add(tape, total, scale(tape, cont, static_cast<T>(weights.lambda_cont)));
  }

  bd.total_g = static_cast<double>(total.item());
  result.generator_total = total;

  // Discriminator loss values on detached fakes; the update itself happens
  // on a separate tape in the trainer.
  bd.adv_d_x = static_cast<double>(
      adversarial_terms<T>(nullptr, dx.forward(batch_x, nullptr),
                           dx.forward(result.fake_x.detached(), nullptr), AdvSide::discriminator, form)
          .item());
  bd.adv_d_y = static_cast<double>(
      adversarial_terms<T>(nullptr, dy.forward(batch_y, nullptr),
                           dy.forward(result.fake_y.detached(), nullptr), AdvSide::discriminator, form)
          .item());
  return result;
}

#define PSEUDOFLOW_INSTANTIATE_LOSSES(T)                                                          \
  template TensorT<T> adversarial_terms<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&,       \
                                           AdvSide, AdvForm);                                     \
  template TensorT<T> unsupervised_recycle_loss<T>(TapeT<T>*, const TensorT<T>&,                  \
                                                   const TensorT<T>&, const NetworkT<T>&,         \
                                                   const NetworkT<T>&, const FlowDraw&,           \
                                                   const NoiseSpec&, const SuppressionFlags&,     \
                                                   Rng&);                                         \
  template TensorT<T> unsupervised_spatial_loss<T>(TapeT<T>*, const TensorT<T>&,                  \
                                                   const TensorT<T>&, const NetworkT<T>&,         \
                                                   const NetworkT<T>&, const FlowDraw&,           \
                                                   const NoiseSpec&, const SuppressionFlags&,     \
                                                   Rng&);                                         \
  template TensorT<T> cycle_loss<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&,              \
                                    const NetworkT<T>&, const NetworkT<T>&);                      \
  template TensorT<T> content_loss<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&);           \
  template ObjectiveT<T> total_objective<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&,      \
                                            const NetworkT<T>&, const NetworkT<T>&,               \
                                            const NetworkT<T>&, const NetworkT<T>&,               \
                                            const FlowDraw&, const LossWeights&, const NoiseSpec&,\
                                            const SuppressionFlags&, AdvForm, Rng&);

PSEUDOFLOW_INSTANTIATE_LOSSES(float)
PSEUDOFLOW_INSTANTIATE_LOSSES(double)

#undef PSEUDOFLOW_INSTANTIATE_LOSSES

}  // namespace pseudoflow

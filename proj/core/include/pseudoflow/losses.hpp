#pragma once

#include <optional>
#include <string>

#include "pseudoflow/flow.hpp"
#include "pseudoflow/models.hpp"

namespace pseudoflow {

struct LossWeights {
  double lambda_ur = 10.0;
  double lambda_us = 10.0;
  double lambda_cyc = 0.0;
  double lambda_cont = 0.0;
  void validate() const;
};

// Video-domain regularization suppression: drops the consistency terms
// whose compared quantities live in the suppressed domain (recycle term of
// that domain plus the spatial term translated into it).
struct SuppressionFlags {
  bool suppress_x_domain = false;
  bool suppress_y_domain = false;
  void validate() const;
};

enum class AdvForm { minimax, nonsaturating, least_squares };
enum class AdvSide { discriminator, generator };

// Per-iteration loss record. Sub-terms suppressed by flags or disabled by a
// zero weight stay unset and serialize as empty CSV cells.
struct LossBreakdown {
  std::int64_t iteration = 0;
  std::uint64_t draw_seed = 0;  // flow/noise seed for the iteration
  double adv_g = 0.0;
  double adv_d_x = 0.0;
  double adv_d_y = 0.0;
  std::optional<double> ur_x, ur_y;  // recycle terms compared in X / in Y
  std::optional<double> us_y, us_x;  // spatial terms compared in Y / in X
  std::optional<double> cyc, cont;
  double total_g = 0.0;

  double ur_total() const { return ur_x.value_or(0.0) + ur_y.value_or(0.0); }
  double us_total() const { return us_y.value_or(0.0) + us_x.value_or(0.0); }

  static std::string csv_header();
  std::string csv_row() const;
};

// Eq-style adversarial terms on patch logit maps, per-element means. The
// discriminator side is the standard BCE objective (least-squares swaps in
// the LSGAN quadratic); generator side selects minimax, non-saturating or
// least-squares. d_real may be empty for the generator side.
template <typename T>
TensorT<T> adversarial_terms(TapeT<T>* tape, const TensorT<T>& d_real, const TensorT<T>& d_fake,
                             AdvSide side, AdvForm form);

// L1 between the simulated future of each real frame and the round-trip
// translation of the simulated future of its fake. gx maps Y->X, gy maps
// X->Y; flow.real warps real frames, flow.translated warps fakes.
template <typename T>
TensorT<T> unsupervised_recycle_loss(TapeT<T>* tape, const TensorT<T>& x_t, const TensorT<T>& y_s,
                                     const NetworkT<T>& gx, const NetworkT<T>& gy,
                                     const FlowDraw& flow, const NoiseSpec& noise,
                                     const SuppressionFlags& flags, Rng& rng);

// Commutativity of warping and translation in the opposite domain.
template <typename T>
TensorT<T> unsupervised_spatial_loss(TapeT<T>* tape, const TensorT<T>& x_t, const TensorT<T>& y_s,
                                     const NetworkT<T>& gx, const NetworkT<T>& gy,
                                     const FlowDraw& flow, const NoiseSpec& noise,
                                     const SuppressionFlags& flags, Rng& rng);

template <typename T>
TensorT<T> cycle_loss(TapeT<T>* tape, const TensorT<T>& x_t, const TensorT<T>& y_s,
                      const NetworkT<T>& gx, const NetworkT<T>& gy);

// Blurred-luma L1 between an image and its translation; stands in for a
// perceptual content feature distance while staying self-contained.
template <typename T>
TensorT<T> content_loss(TapeT<T>* tape, const TensorT<T>& x, const TensorT<T>& translated);

template <typename T>
struct ObjectiveT {
  TensorT<T> generator_total;  // on tape
  TensorT<T> fake_y;           // G_Y(x), Y-domain fake
  TensorT<T> fake_x;           // G_X(y), X-domain fake
  LossBreakdown breakdown;
};

// Assembles the generator-side total (adversarial + weighted consistency
// terms) and reports the two discriminator losses as values. One flow draw
// and one noise family are shared by the recycle and spatial losses.
template <typename T>
ObjectiveT<T> total_objective(TapeT<T>* tape, const TensorT<T>& batch_x, const TensorT<T>& batch_y,
                              const NetworkT<T>& gx, const NetworkT<T>& gy, const NetworkT<T>& dx,
                              const NetworkT<T>& dy, const FlowDraw& flow,
                              const LossWeights& weights, const NoiseSpec& noise,
                              const SuppressionFlags& flags, AdvForm form, Rng& rng);

}  // namespace pseudoflow

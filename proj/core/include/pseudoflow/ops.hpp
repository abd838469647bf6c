#pragma once

#include "pseudoflow/tape.hpp"
#include "pseudoflow/tensor.hpp"

namespace pseudoflow {

enum class PadMode { zero, reflect };

// Every op takes the recording tape first; pass nullptr for a pure forward
// evaluation. Gradients are recorded only for inputs that already live on
// the tape, so constants (data batches, fixed kernels, synthetic noise)
// cost nothing.

// input N x C x H x W, weight O x C x kh x kw, bias O (or empty for none).
// Cross-correlation, as usual for inference frameworks.
template <typename T>
TensorT<T> conv2d(TapeT<T>* tape, const TensorT<T>& input, const TensorT<T>& weight,
                  const TensorT<T>& bias, int stride, int pad, PadMode mode);

template <typename T>
TensorT<T> upsample_nearest2x(TapeT<T>* tape, const TensorT<T>& input);

// Nearest 2x resize followed by a stride-1 conv (resize-convolution).
template <typename T>
TensorT<T> upsample_conv(TapeT<T>* tape, const TensorT<T>& input, const TensorT<T>& weight,
                         const TensorT<T>& bias, int pad, PadMode mode);

template <typename T>
TensorT<T> relu(TapeT<T>* tape, const TensorT<T>& a);

template <typename T>
TensorT<T> leaky_relu(TapeT<T>* tape, const TensorT<T>& a, T slope = T(0.2));

template <typename T>
TensorT<T> tanh_op(TapeT<T>* tape, const TensorT<T>& a);

template <typename T>
TensorT<T> sigmoid_op(TapeT<T>* tape, const TensorT<T>& a);

// Elementwise pairs accept equal shapes or a scalar (numel == 1) on either
// side; no other broadcasting.
template <typename T>
TensorT<T> add(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b);

template <typename T>
TensorT<T> sub(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b);

template <typename T>
TensorT<T> mul(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b);

template <typename T>
TensorT<T> scale(TapeT<T>* tape, const TensorT<T>& a, T s);

// Clamp to the valid pixel range [-1, 1]; gradient passes inside the range.
template <typename T>
TensorT<T> clamp_unit(TapeT<T>* tape, const TensorT<T>& a);

// Per-sample per-channel standardization with affine gain/bias (size C).
template <typename T>
TensorT<T> instance_norm(TapeT<T>* tape, const TensorT<T>& input, const TensorT<T>& gain,
                         const TensorT<T>& bias, T eps = T(1e-5));

template <typename T>
TensorT<T> mean_all(TapeT<T>* tape, const TensorT<T>& a);

// Mean over all elements of |a - b|; the per-element normalization keeps
// loss weights resolution-independent.
template <typename T>
TensorT<T> l1_distance(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b);

// Numerically stabilized mean binary cross entropy on raw logits.
template <typename T>
TensorT<T> bce_with_logits(TapeT<T>* tape, const TensorT<T>& logits, const TensorT<T>& targets);

// Optional post-op finiteness guard. Off by default (hot path); tests and
// the trainer's abort paths switch it on. A non-finite op output throws
// NumericError instead of propagating.
void set_finite_checks(bool enabled);
bool finite_checks_enabled();

namespace detail {
template <typename T>
void check_finite(const TensorT<T>& t, const char* op);
}

}  // namespace pseudoflow

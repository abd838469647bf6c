#pragma once

#include "pseudoflow/flow_field.hpp"
#include "pseudoflow/ops.hpp"

namespace pseudoflow {

enum class Border { clamp, zero };

// Bilinear backward warp: out(p) = sample(image, p + f(p)). Differentiable
// w.r.t. the image (gradients scatter through the four bilinear weights);
// the flow is always a constant input here.
template <typename T>
TensorT<T> backward_warp(TapeT<T>* tape, const TensorT<T>& image, const FlowField& flow,
                         Border border = Border::clamp);

// Per-pixel confidence weights exp(-alpha * ||cur(p) - warp(prev)(p)||_2),
// norm taken over the channel vector. Shape H x W, values in (0, 1].
template <typename T>
TensorT<T> occlusion_mask(const TensorT<T>& prev, const TensorT<T>& cur, const FlowField& flow,
                          T alpha = T(50));

}  // namespace pseudoflow

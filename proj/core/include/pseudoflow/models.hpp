#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pseudoflow/ops.hpp"
#include "pseudoflow/rng.hpp"

namespace pseudoflow {

struct GeneratorConfig {
  int in_channels = 3;
  int out_channels = 3;
  int base_width = 16;
  int n_downsample = 2;
  int n_resblocks = 3;

  static GeneratorConfig desk() { return {}; }
  static GeneratorConfig full_scale() {
    GeneratorConfig c;
    c.base_width = 64;
    c.n_resblocks = 6;
    return c;
  }
  void validate() const;
  std::uint64_t hash() const;
};

struct DiscriminatorConfig {
  int in_channels = 3;
  int base_width = 16;
  int n_stride2 = 3;
  // The full-scale patch stack inserts one more stride-1 stage before the
  // logit conv; together with three stride-2 convs that lands the 70x70
  // receptive field.
  bool extra_stride1_stage = false;

  static DiscriminatorConfig desk() { return {}; }
  static DiscriminatorConfig full_scale() {
    DiscriminatorConfig c;
    c.base_width = 64;
    c.extra_stride1_stage = true;
    return c;
  }
  void validate() const;
  std::uint64_t hash() const;
  int receptive_field() const;
};

template <typename T>
struct ConvLayerT {
  TensorT<T> w;  // O x I x k x k
  TensorT<T> b;  // O
  int stride = 1;
  int pad = 0;
  PadMode mode = PadMode::zero;
  bool upsample2x = false;  // nearest 2x resize before the conv
};

template <typename T>
struct InstanceNormLayerT {
  TensorT<T> gain, bias;
};

enum class Act { relu, leaky_relu, tanh };

template <typename T>
struct ResidualBlockT {
  ConvLayerT<T> c1, c2;
  InstanceNormLayerT<T> n1, n2;
};

template <typename T>
using LayerT = std::variant<ConvLayerT<T>, InstanceNormLayerT<T>, Act, ResidualBlockT<T>>;

// Flat fully convolutional network; immutable during forward, parameters
// owned by the optimizer between iterations.
template <typename T>
struct NetworkT {
  std::vector<LayerT<T>> layers;
  std::uint64_t config_hash = 0;

  TensorT<T> forward(const TensorT<T>& x, TapeT<T>* tape = nullptr) const;

  // Registers every parameter as a gradient leaf on the tape. Call once per
  // tape; detach_params() before recording on a different tape.
  void attach(TapeT<T>& tape);
  void detach_params();

  std::vector<std::pair<std::string, TensorT<T>*>> parameters();
  std::vector<std::pair<std::string, const TensorT<T>*>> parameters() const;
  std::int64_t parameter_count() const;
};

using Network = NetworkT<float>;

template <typename T>
NetworkT<T> build_generator(const GeneratorConfig& cfg, std::uint64_t seed);

template <typename T>
NetworkT<T> build_discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed);

// Identity-wiring helper used by tests and stub pipelines: a single 1x1
// conv initialized to the (optionally scaled/shifted) identity color map.
template <typename T>
NetworkT<T> make_pointwise_linear(int channels, T gain, T bias_value);

}  // namespace pseudoflow

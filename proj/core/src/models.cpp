#include "pseudoflow/models.hpp"

#include <sstream>

namespace pseudoflow {

namespace {

std::uint64_t hash_mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

template <typename T>
ConvLayerT<T> make_conv(int in_ch, int out_ch, int k, int stride, int pad, PadMode mode, Rng& rng,
                        bool upsample = false) {
  ConvLayerT<T> c;
  c.w = TensorT<T>::randn({out_ch, in_ch, k, k}, rng, T(0.02));
  c.b = TensorT<T>::zeros({out_ch});
  c.stride = stride;
  c.pad = pad;
  c.mode = mode;
  c.upsample2x = upsample;
  return c;
}

template <typename T>
InstanceNormLayerT<T> make_norm(int ch) {
  InstanceNormLayerT<T> n;
  n.gain = TensorT<T>::ones({ch});
  n.bias = TensorT<T>::zeros({ch});
  return n;
}

template <typename T>
TensorT<T> conv_forward(const ConvLayerT<T>& c, const TensorT<T>& x, TapeT<T>* tape) {
  if (c.upsample2x) return upsample_conv(tape, x, c.w, c.b, c.pad, c.mode);
  return conv2d(tape, x, c.w, c.b, c.stride, c.pad, c.mode);
}

template <typename T>
TensorT<T> act_forward(Act a, const TensorT<T>& x, TapeT<T>* tape) {
  switch (a) {
    case Act::relu: return relu(tape, x);
    case Act::leaky_relu: return leaky_relu(tape, x, T(0.2));
    case Act::tanh: return tanh_op(tape, x);
  }
  throw ConfigError("unknown activation");
}

template <typename T, typename Fn>
void visit_params(NetworkT<T>& net, Fn&& fn) {
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const std::string p = "L" + std::to_string(i);
    std::visit(
        [&](auto& layer) {
          using L = std::decay_t<decltype(layer)>;
          if constexpr (std::is_same_v<L, ConvLayerT<T>>) {
            fn(p + ".w", layer.w);
            fn(p + ".b", layer.b);
          } else if constexpr (std::is_same_v<L, InstanceNormLayerT<T>>) {
            fn(p + ".gain", layer.gain);
            fn(p + ".bias", layer.bias);
          } else if constexpr (std::is_same_v<L, ResidualBlockT<T>>) {
            fn(p + ".c1.w", layer.c1.w);
            fn(p + ".c1.b", layer.c1.b);
            fn(p + ".n1.gain", layer.n1.gain);
            fn(p + ".n1.bias", layer.n1.bias);
            fn(p + ".c2.w", layer.c2.w);
            fn(p + ".c2.b", layer.c2.b);
            fn(p + ".n2.gain", layer.n2.gain);
            fn(p + ".n2.bias", layer.n2.bias);
          }
        },
        net.layers[i]);
  }
}

}  // namespace

void GeneratorConfig::validate() const {
  if (in_channels < 1 || out_channels < 1) throw ConfigError("generator: channel counts must be >= 1");
  if (base_width < 1) throw ConfigError("generator: base width must be >= 1");
  if (n_downsample < 1) throw ConfigError("generator: n_downsample must be >= 1");
  if (n_resblocks < 1) throw ConfigError("generator: n_resblocks must be >= 1");
}

std::uint64_t GeneratorConfig::hash() const {
  std::uint64_t h = 0x67656e;
  for (std::uint64_t v : {in_channels, out_channels, base_width, n_downsample, n_resblocks})
    h = hash_mix(h, v);
  return h;
}

void DiscriminatorConfig::validate() const {
  if (in_channels < 1) throw ConfigError("discriminator: channel count must be >= 1");
  if (base_width < 1) throw ConfigError("discriminator: base width must be >= 1");
  if (n_stride2 < 1) throw ConfigError("discriminator: needs at least one stride-2 conv");
}

std::uint64_t DiscriminatorConfig::hash() const {
  std::uint64_t h = 0x64697363;
  for (std::uint64_t v :
       {in_channels, base_width, n_stride2, static_cast<int>(extra_stride1_stage)})
    h = hash_mix(h, v);
  return h;
}

int DiscriminatorConfig::receptive_field() const {
  int rf = 1, jump = 1;
  for (int i = 0; i < n_stride2; ++i) {
    rf += 3 * jump;  // kernel 4
    jump *= 2;
  }
  if (extra_stride1_stage) rf += 3 * jump;
  rf += 3 * jump;  // logit conv, stride 1
  return rf;
}

template <typename T>
TensorT<T> NetworkT<T>::forward(const TensorT<T>& x, TapeT<T>* tape) const {
  TensorT<T> h = x;
  for (const auto& layer : layers) {
    std::visit(
        [&](const auto& l) {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, ConvLayerT<T>>) {
            h = conv_forward(l, h, tape);
          } else if constexpr (std::is_same_v<L, InstanceNormLayerT<T>>) {
            h = instance_norm(tape, h, l.gain, l.bias);
          } else if constexpr (std::is_same_v<L, Act>) {
            h = act_forward(l, h, tape);
          } else if constexpr (std::is_same_v<L, ResidualBlockT<T>>) {
            TensorT<T> y = conv_forward(l.c1, h, tape);
            y = instance_norm(tape, y, l.n1.gain, l.n1.bias);
            y = relu(tape, y);
            y = conv_forward(l.c2, y, tape);
            y = instance_norm(tape, y, l.n2.gain, l.n2.bias);
            h = add(tape, h, y);
          }
        },
        layer);
  }
  return h;
}

template <typename T>
void NetworkT<T>::attach(TapeT<T>& tape) {
  visit_params(*this, [&](const std::string&, TensorT<T>& t) { tape.leaf(t); });
}

template <typename T>
void NetworkT<T>::detach_params() {
  visit_params(*this, [](const std::string&, TensorT<T>& t) { t.set_node(-1); });
}

template <typename T>
std::vector<std::pair<std::string, TensorT<T>*>> NetworkT<T>::parameters() {
  std::vector<std::pair<std::string, TensorT<T>*>> out;
  visit_params(*this, [&](const std::string& name, TensorT<T>& t) { out.emplace_back(name, &t); });
  return out;
}

template <typename T>
std::vector<std::pair<std::string, const TensorT<T>*>> NetworkT<T>::parameters() const {
  std::vector<std::pair<std::string, const TensorT<T>*>> out;
  visit_params(const_cast<NetworkT<T>&>(*this),
               [&](const std::string& name, TensorT<T>& t) { out.emplace_back(name, &t); });
  return out;
}

template <typename T>
std::int64_t NetworkT<T>::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& [name, t] : parameters()) n += t->numel();
  return n;
}

template <typename T>
NetworkT<T> build_generator(const GeneratorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  NetworkT<T> net;
  net.config_hash = cfg.hash();

  int ch = cfg.base_width;
  net.layers.push_back(make_conv<T>(cfg.in_channels, ch, 7, 1, 3, PadMode::reflect, rng));
  net.layers.push_back(make_norm<T>(ch));
  net.layers.push_back(Act::relu);

  for (int i = 0; i < cfg.n_downsample; ++i) {
    net.layers.push_back(make_conv<T>(ch, ch * 2, 3, 2, 1, PadMode::zero, rng));
    ch *= 2;
    net.layers.push_back(make_norm<T>(ch));
    net.layers.push_back(Act::relu);
  }

  for (int r = 0; r < cfg.n_resblocks; ++r) {
    ResidualBlockT<T> rb;
    rb.c1 = make_conv<T>(ch, ch, 3, 1, 1, PadMode::reflect, rng);
    rb.n1 = make_norm<T>(ch);
    rb.c2 = make_conv<T>(ch, ch, 3, 1, 1, PadMode::reflect, rng);
    rb.n2 = make_norm<T>(ch);
    net.layers.push_back(std::move(rb));
  }

  for (int i = 0; i < cfg.n_downsample; ++i) {
    net.layers.push_back(make_conv<T>(ch, ch / 2, 3, 1, 1, PadMode::zero, rng, /*upsample=*/true));
    ch /= 2;
    net.layers.push_back(make_norm<T>(ch));
    net.layers.push_back(Act::relu);
  }

  net.layers.push_back(make_conv<T>(ch, cfg.out_channels, 7, 1, 3, PadMode::reflect, rng));
  net.layers.push_back(Act::tanh);
  return net;
}

template <typename T>
NetworkT<T> build_discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  NetworkT<T> net;
  net.config_hash = cfg.hash();

  int ch = cfg.base_width;
  net.layers.push_back(make_conv<T>(cfg.in_channels, ch, 4, 2, 1, PadMode::zero, rng));
  net.layers.push_back(Act::leaky_relu);
  for (int i = 1; i < cfg.n_stride2; ++i) {
    net.layers.push_back(make_conv<T>(ch, ch * 2, 4, 2, 1, PadMode::zero, rng));
    ch *= 2;
    net.layers.push_back(make_norm<T>(ch));
    net.layers.push_back(Act::leaky_relu);
  }
  if (cfg.extra_stride1_stage) {
    net.layers.push_back(make_conv<T>(ch, ch * 2, 4, 1, 1, PadMode::zero, rng));
    ch *= 2;
    net.layers.push_back(make_norm<T>(ch));
    net.layers.push_back(Act::leaky_relu);
  }
  net.layers.push_back(make_conv<T>(ch, 1, 4, 1, 1, PadMode::zero, rng));
  return net;
}

template <typename T>
NetworkT<T> make_pointwise_linear(int channels, T gain, T bias_value) {
  NetworkT<T> net;
  ConvLayerT<T> c;
  c.w = TensorT<T>::zeros({channels, channels, 1, 1});
  for (int i = 0; i < channels; ++i) c.w[i * channels + i] = gain;
  c.b = TensorT<T>::full({channels}, bias_value);
  net.layers.push_back(std::move(c));
  net.config_hash = 0x1d1d;
  return net;
}

template struct NetworkT<float>;
template struct NetworkT<double>;
template NetworkT<float> build_generator<float>(const GeneratorConfig&, std::uint64_t);
template NetworkT<double> build_generator<double>(const GeneratorConfig&, std::uint64_t);
template NetworkT<float> build_discriminator<float>(const DiscriminatorConfig&, std::uint64_t);
template NetworkT<double> build_discriminator<double>(const DiscriminatorConfig&, std::uint64_t);
template NetworkT<float> make_pointwise_linear<float>(int, float, float);
template NetworkT<double> make_pointwise_linear<double>(int, double, double);

}  // namespace pseudoflow

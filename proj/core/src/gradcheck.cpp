#include "pseudoflow/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pseudoflow/flow.hpp"
#include "pseudoflow/warp.hpp"

namespace pseudoflow {

namespace {

constexpr double kFdRelFloor = 1e-3;

double rel_err(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kFdRelFloor});
  return std::abs(analytic - numeric) / denom;
}

}  // namespace

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  for (const auto& e : entries) {
    os << (e.max_rel_err < tolerance ? "  ok   " : "  FAIL ") << e.name << ": max rel err "
       << e.max_rel_err << " over " << e.cases << " case(s)\n";
  }
  os << (passed() ? "all gradients within " : "gradient failures at tolerance ") << tolerance;
  return os.str();
}

double finite_difference_max_rel_err(const GraphBuilder& build, std::vector<Tensor64> leaves) {
  Tape64 tape;
  for (auto& leaf : leaves) tape.leaf(leaf);
  Tensor64 root = build(&tape, leaves);
  if (root.numel() != 1) throw ShapeError("gradient check root must be scalar");
  const auto grads = tape.backward(root);

  double worst = 0.0;
  for (auto& leaf : leaves) {
    const Tensor64 analytic = grads.get(leaf);
    for (std::int64_t i = 0; i < leaf.numel(); ++i) {
      const double v = leaf[i];
      const double h = 1e-5 * (std::abs(v) + 1.0);
      leaf[i] = v + h;
      const double f1 = build(nullptr, leaves).item();
      leaf[i] = v - h;
      const double f2 = build(nullptr, leaves).item();
      leaf[i] = v;
      const double numeric = (f1 - f2) / (2.0 * h);
      worst = std::max(worst, rel_err(analytic[i], numeric));
    }
  }
  return worst;
}

GradCheckReport check_gradients(NetworkT<double>& net, const TensorT<double>& input,
                                double tolerance) {
  GradCheckReport report;
  report.tolerance = tolerance;
  auto params = net.parameters();
  if (params.empty()) return report;

  Tape64 tape;
  net.attach(tape);
  Tensor64 root = mean_all(&tape, net.forward(input, &tape));
  const auto grads = tape.backward(root);

  for (auto& [name, p] : params) {
    GradCheckEntry entry;
    entry.name = name;
    entry.cases = static_cast<int>(p->numel());
    const Tensor64 analytic = grads.get(*p);
    for (std::int64_t i = 0; i < p->numel(); ++i) {
      const double v = (*p)[i];
      const double h = 1e-5 * (std::abs(v) + 1.0);
      (*p)[i] = v + h;
      const double f1 = mean_all<double>(nullptr, net.forward(input, nullptr)).item();
      (*p)[i] = v - h;
      const double f2 = mean_all<double>(nullptr, net.forward(input, nullptr)).item();
      (*p)[i] = v;
      entry.max_rel_err = std::max(entry.max_rel_err, rel_err(analytic[i], (f1 - f2) / (2.0 * h)));
    }
    report.entries.push_back(std::move(entry));
  }
  net.detach_params();
  return report;
}

namespace {

Tensor64 rand_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  return Tensor64::uniform(std::move(shape), rng, lo, hi);
}

// Keeps elementwise inputs away from activation kinks so the central
// difference stays on one side.
Tensor64 rand_tensor_off_kinks(Shape shape, Rng& rng) {
  Tensor64 t = rand_tensor(std::move(shape), rng);
  for (std::int64_t i = 0; i < t.numel(); ++i) {
    double v = t[i];
    if (std::abs(v) < 0.05) v += v >= 0 ? 0.1 : -0.1;
    t[i] = v;
  }
  return t;
}

struct SuiteCase {
  std::string name;
  GraphBuilder build;
  std::vector<Tensor64> leaves;
};

void run_case(GradCheckReport& report, const std::string& name, const GraphBuilder& build,
              std::vector<Tensor64> leaves) {
  auto it = std::find_if(report.entries.begin(), report.entries.end(),
                         [&](const GradCheckEntry& e) { return e.name == name; });
  if (it == report.entries.end()) {
    report.entries.push_back({name, 0.0, 0});
    it = report.entries.end() - 1;
  }
  it->max_rel_err = std::max(it->max_rel_err, finite_difference_max_rel_err(build, std::move(leaves)));
  it->cases += 1;
}

}  // namespace

GradCheckReport check_op_suite(int cases_per_op, double tolerance, std::uint64_t seed) {
  GradCheckReport report;
  report.tolerance = tolerance;
  Rng rng(seed);

  for (int c = 0; c < cases_per_op; ++c) {
    const std::int64_t n = 1 + static_cast<std::int64_t>(rng.below(2));
    const std::int64_t ci = 1 + static_cast<std::int64_t>(rng.below(3));
    const std::int64_t co = 1 + static_cast<std::int64_t>(rng.below(3));
    const std::int64_t h = 3 + static_cast<std::int64_t>(rng.below(4));
    const std::int64_t w = 3 + static_cast<std::int64_t>(rng.below(4));
    const std::int64_t k = rng.below(2) ? 3 : 1;
    const int stride = rng.below(2) ? 2 : 1;
    const int pad = static_cast<int>(rng.below(2));

    run_case(report, "conv2d_zero",
             [=](Tape64* t, std::vector<Tensor64>& L) {
               return mean_all(t, conv2d(t, L[0], L[1], L[2], stride, pad, PadMode::zero));
             },
             {rand_tensor({n, ci, h, w}, rng), rand_tensor({co, ci, k, k}, rng),
              rand_tensor({co}, rng)});

    run_case(report, "conv2d_reflect",
             [=](Tape64* t, std::vector<Tensor64>& L) {
               return mean_all(t, conv2d(t, L[0], L[1], L[2], 1, 1, PadMode::reflect));
             },
             {rand_tensor({n, ci, h, w}, rng), rand_tensor({co, ci, 3, 3}, rng),
              rand_tensor({co}, rng)});

    run_case(report, "upsample_conv",
             [=](Tape64* t, std::vector<Tensor64>& L) {
               return mean_all(t, upsample_conv(t, L[0], L[1], L[2], 1, PadMode::zero));
             },
             {rand_tensor({1, ci, h, w}, rng), rand_tensor({co, ci, 3, 3}, rng),
              rand_tensor({co}, rng)});

    run_case(report, "instance_norm",
             [](Tape64* t, std::vector<Tensor64>& L) {
               // mean of squares: plain mean of a normalized plane is ~0 and
               // carries no signal through the affine gain.
               auto y = instance_norm(t, L[0], L[1], L[2]);
               return mean_all(t, mul(t, y, y));
             },
             {rand_tensor({n, ci, h, w}, rng), rand_tensor({ci}, rng, 0.5, 1.5),
              rand_tensor({ci}, rng)});

    run_case(report, "relu",
             [](Tape64* t, std::vector<Tensor64>& L) { return mean_all(t, relu(t, L[0])); },
             {rand_tensor_off_kinks({n, ci, h, w}, rng)});

    run_case(report, "leaky_relu",
             [](Tape64* t, std::vector<Tensor64>& L) {
               return mean_all(t, leaky_relu(t, L[0], 0.2));
             },
             {rand_tensor_off_kinks({n, ci, h, w}, rng)});

    run_case(report, "tanh",
             [](Tape64* t, std::vector<Tensor64>& L) { return mean_all(t, tanh_op(t, L[0])); },
             {rand_tensor({n, ci, h, w}, rng, -2.0, 2.0)});

    run_case(report, "sigmoid",
             [](Tape64* t, std::vector<Tensor64>& L) { return mean_all(t, sigmoid_op(t, L[0])); },
             {rand_tensor({n, ci, h, w}, rng, -3.0, 3.0)});

    run_case(report, "clamp_unit",
             [](Tape64* t, std::vector<Tensor64>& L) { return mean_all(t, clamp_unit(t, L[0])); },
             {rand_tensor_off_kinks({h, w}, rng)});

    run_case(report, "add",
             [](Tape64* t, std::vector<Tensor64>& L) {
               return mean_all(t, mul(t, add(t, L[0], L[1]), add(t, L[0], L[1])));
             },
             {rand_tensor({h, w}, rng), rand_tensor({h, w}, rng)});

    run_case(report, "sub",
             [](Tape64* t, std::vector<Tensor64>& L) {
               return mean_all(t, mul(t, sub(t, L[0], L[1]), sub(t, L[0], L[1])));
             },
             {rand_tensor({h, w}, rng), rand_tensor({h, w}, rng)});

    run_case(report, "mul",
             [](Tape64* t, std::vector<Tensor64>& L) { return mean_all(t, mul(t, L[0], L[1])); },
             {rand_tensor({h, w}, rng), rand_tensor({h, w}, rng)});

    run_case(report, "scalar_broadcast",
             [](Tape64* t, std::vector<Tensor64>& L) {
               return mean_all(t, mul(t, add(t, L[0], L[1]), sub(t, L[0], L[1])));
             },
             {rand_tensor({h, w}, rng), rand_tensor({1}, rng)});

    run_case(report, "scale",
             [](Tape64* t, std::vector<Tensor64>& L) {
               return mean_all(t, mul(t, scale(t, L[0], 1.7), L[0]));
             },
             {rand_tensor({h, w}, rng)});

    run_case(report, "mean",
             [](Tape64* t, std::vector<Tensor64>& L) {
               auto m = mean_all(t, L[0]);
               return mul(t, m, m);
             },
             {rand_tensor({h, w}, rng)});

    {
      Tensor64 a = rand_tensor({h, w}, rng);
      Tensor64 b = rand_tensor({h, w}, rng);
      // keep |a-b| away from the sign kink
      for (std::int64_t i = 0; i < a.numel(); ++i)
        if (std::abs(a[i] - b[i]) < 0.05) b[i] -= 0.2;
      run_case(report, "l1_distance",
               [](Tape64* t, std::vector<Tensor64>& L) { return l1_distance(t, L[0], L[1]); },
               {a, b});
    }

    run_case(report, "bce_with_logits",
             [](Tape64* t, std::vector<Tensor64>& L) { return bce_with_logits(t, L[0], L[1]); },
             {rand_tensor({h, w}, rng, -3.0, 3.0), rand_tensor({h, w}, rng, 0.0, 1.0)});

    {
      FlowField flow(static_cast<int>(w), static_cast<int>(h));
      for (auto& v : flow.dx) v = static_cast<float>(rng.uniform(-2.0, 2.0));
      for (auto& v : flow.dy) v = static_cast<float>(rng.uniform(-2.0, 2.0));
      const Border border = rng.below(2) ? Border::clamp : Border::zero;
      run_case(report, "backward_warp",
               [flow, border](Tape64* t, std::vector<Tensor64>& L) {
                 auto y = backward_warp(t, L[0], flow, border);
                 return mean_all(t, mul(t, y, y));
               },
               {rand_tensor({1, ci, h, w}, rng)});
    }
  }

  // Composite: a two-resblock generator checked end to end. Central
  // differences lie at relu kinks, so the evaluation point is resampled
  // until every relu input clears the kink by a wide margin relative to
  // the finite difference step.
  {
    GeneratorConfig cfg;
    cfg.in_channels = 2;
    cfg.out_channels = 2;
    cfg.base_width = 3;
    cfg.n_downsample = 1;
    cfg.n_resblocks = 2;
    auto net = build_generator<double>(cfg, seed ^ 0xabcdULL);

    auto min_relu_margin = [&net](const Tensor64& input) {
      double margin = 1e9;
      auto note = [&margin](const Tensor64& pre) {
        for (std::int64_t i = 0; i < pre.numel(); ++i)
          margin = std::min(margin, std::abs(pre[i]));
      };
      Tensor64 h = input;
      for (const auto& layer : net.layers) {
        std::visit(
            [&](const auto& l) {
              using L = std::decay_t<decltype(l)>;
              if constexpr (std::is_same_v<L, ConvLayerT<double>>) {
                h = l.upsample2x ? upsample_conv<double>(nullptr, h, l.w, l.b, l.pad, l.mode)
                                 : conv2d<double>(nullptr, h, l.w, l.b, l.stride, l.pad, l.mode);
              } else if constexpr (std::is_same_v<L, InstanceNormLayerT<double>>) {
                h = instance_norm<double>(nullptr, h, l.gain, l.bias);
              } else if constexpr (std::is_same_v<L, Act>) {
                if (l == Act::relu || l == Act::leaky_relu) note(h);
                if (l == Act::relu) h = relu<double>(nullptr, h);
                else if (l == Act::leaky_relu) h = leaky_relu<double>(nullptr, h, 0.2);
                else h = tanh_op<double>(nullptr, h);
              } else if constexpr (std::is_same_v<L, ResidualBlockT<double>>) {
                Tensor64 y = conv2d<double>(nullptr, h, l.c1.w, l.c1.b, 1, l.c1.pad, l.c1.mode);
                y = instance_norm<double>(nullptr, y, l.n1.gain, l.n1.bias);
                note(y);
                y = relu<double>(nullptr, y);
                y = conv2d<double>(nullptr, y, l.c2.w, l.c2.b, 1, l.c2.pad, l.c2.mode);
                y = instance_norm<double>(nullptr, y, l.n2.gain, l.n2.bias);
                h = add<double>(nullptr, h, y);
              }
            },
            layer);
      }
      return margin;
    };

    Rng in_rng(seed ^ 0x5eed);
    Tensor64 input = Tensor64::uniform({1, 2, 8, 8}, in_rng, -1.0, 1.0);
    for (int tries = 0; tries < 64 && min_relu_margin(input) < 1e-3; ++tries)
      input = Tensor64::uniform({1, 2, 8, 8}, in_rng, -1.0, 1.0);
    GradCheckReport nr = check_gradients(net, input, tolerance);
    GradCheckEntry composite{"composite_2resblock_net", 0.0, 0};
    for (const auto& e : nr.entries) {
      composite.max_rel_err = std::max(composite.max_rel_err, e.max_rel_err);
      composite.cases += e.cases;
    }
    report.entries.push_back(composite);
  }

  return report;
}

}  // namespace pseudoflow

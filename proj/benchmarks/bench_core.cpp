#include <benchmark/benchmark.h>

#include "pseudoflow/flow.hpp"
#include "pseudoflow/losses.hpp"
#include "pseudoflow/presets.hpp"
#include "pseudoflow/trainer.hpp"
#include "pseudoflow/warp.hpp"

using namespace pseudoflow;

namespace {

Tensor desk_image(std::uint64_t seed) {
  Rng rng(seed);
  return Tensor::uniform({1, 3, 64, 64}, rng, -1.f, 1.f);
}

}  // namespace

static void BM_Conv2dForward(benchmark::State& state) {
  Rng rng(1);
  const Tensor in = Tensor::uniform({1, 64, 16, 16}, rng, -1.f, 1.f);
  const Tensor w = Tensor::randn({64, 64, 3, 3}, rng, 0.02f);
  const Tensor b = Tensor::zeros({64});
  for (auto _ : state)
    benchmark::DoNotOptimize(conv2d<float>(nullptr, in, w, b, 1, 1, PadMode::reflect));
}
BENCHMARK(BM_Conv2dForward);

static void BM_Conv2dTrainStep(benchmark::State& state) {
  Rng rng(1);
  Tensor in = Tensor::uniform({1, 64, 16, 16}, rng, -1.f, 1.f);
  Tensor w = Tensor::randn({64, 64, 3, 3}, rng, 0.02f);
  Tensor b = Tensor::zeros({64});
  for (auto _ : state) {
    Tape tape;
    tape.leaf(w);
    tape.leaf(b);
    Tensor out = conv2d(&tape, in, w, b, 1, 1, PadMode::reflect);
    Tensor root = mean_all(&tape, mul(&tape, out, out));
    benchmark::DoNotOptimize(tape.backward(root));
  }
}
BENCHMARK(BM_Conv2dTrainStep);

static void BM_GeneratorForward(benchmark::State& state) {
  const auto net = build_generator<float>(GeneratorConfig::desk(), 7);
  const Tensor in = desk_image(2);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(in));
}
BENCHMARK(BM_GeneratorForward);

static void BM_DiscriminatorForward(benchmark::State& state) {
  const auto net = build_discriminator<float>(DiscriminatorConfig::desk(), 7);
  const Tensor in = desk_image(3);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(in));
}
BENCHMARK(BM_DiscriminatorForward);

static void BM_FlowSynthesis64(benchmark::State& state) {
  FlowSpec spec;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(synthesize_flow(spec, 64, 64, seed++));
}
BENCHMARK(BM_FlowSynthesis64);

static void BM_FlowSynthesis256(benchmark::State& state) {
  FlowSpec spec;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(synthesize_flow(spec, 256, 256, seed++));
}
BENCHMARK(BM_FlowSynthesis256);

static void BM_BackwardWarp(benchmark::State& state) {
  const Tensor img = desk_image(4);
  FlowSpec spec;
  const FlowField flow = synthesize_flow(spec, 64, 64, 5);
  for (auto _ : state)
    benchmark::DoNotOptimize(backward_warp<float>(nullptr, img, flow, Border::clamp));
}
BENCHMARK(BM_BackwardWarp);

static void BM_OcclusionMask(benchmark::State& state) {
  const Tensor a = desk_image(6), b = desk_image(7);
  FlowSpec spec;
  const FlowField flow = synthesize_flow(spec, 64, 64, 8);
  for (auto _ : state) benchmark::DoNotOptimize(occlusion_mask(a, b, flow, 50.f));
}
BENCHMARK(BM_OcclusionMask);

static void BM_TrainIterationFullPreset(benchmark::State& state) {
  TrainConfig cfg = desk_full_preset();
  cfg.out_dir = "/tmp/psf_bench_run";
  Trainer trainer(cfg);
  const Tensor bx = desk_image(9), by = desk_image(10);
  for (auto _ : state) benchmark::DoNotOptimize(trainer.train_iteration(bx, by));
}
BENCHMARK(BM_TrainIterationFullPreset)->Unit(benchmark::kMillisecond);

static void BM_TrainIterationAdvCycOnly(benchmark::State& state) {
  TrainConfig cfg = desk_full_preset();
  apply_ablation_preset(cfg, "adv-cyc-only");
  cfg.out_dir = "/tmp/psf_bench_run2";
  Trainer trainer(cfg);
  const Tensor bx = desk_image(11), by = desk_image(12);
  for (auto _ : state) benchmark::DoNotOptimize(trainer.train_iteration(bx, by));
}
BENCHMARK(BM_TrainIterationAdvCycOnly)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

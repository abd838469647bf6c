#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "pseudoflow/metrics.hpp"
#include "pseudoflow/presets.hpp"
#include "pseudoflow/trainer.hpp"

using namespace pseudoflow;
namespace fs = std::filesystem;

namespace {

VideoSequence seq_of(std::vector<Tensor> frames, std::vector<FlowField> flows = {}) {
  VideoSequence s;
  s.width = static_cast<int>(frames[0].size(3));
  s.height = static_cast<int>(frames[0].size(2));
  s.domain = kDomainX;
  s.clip_id = 0;
  s.frames = std::move(frames);
  s.gt_flow = std::move(flows);
  return s;
}

}  // namespace

TEST_CASE("warping error of identical frames under zero flow is zero") {
  Rng rng(1);
  const Tensor f = Tensor::uniform({1, 3, 6, 6}, rng, -0.5f, 0.5f);
  VideoSequence s = seq_of({f, f});
  const std::vector<FlowField> flows = {FlowField(6, 6)};
  CHECK(warping_error(s, s, flows, 50.0) == doctest::Approx(0.0));
}

TEST_CASE("warping error matches a brute-force evaluation on handcrafted frames") {
  // 4x4 two-frame case with a known fractional flow
  Rng rng(2);
  Tensor a = Tensor::uniform({1, 3, 4, 4}, rng, -0.8f, 0.8f);
  Tensor b = Tensor::uniform({1, 3, 4, 4}, rng, -0.8f, 0.8f);
  Tensor ta = Tensor::uniform({1, 3, 4, 4}, rng, -0.8f, 0.8f);
  Tensor tb = Tensor::uniform({1, 3, 4, 4}, rng, -0.8f, 0.8f);
  FlowField flow(4, 4);
  for (std::size_t i = 0; i < flow.pixels(); ++i) {
    flow.dx[i] = static_cast<float>(rng.uniform(-1.5, 1.5));
    flow.dy[i] = static_cast<float>(rng.uniform(-1.5, 1.5));
  }
  VideoSequence source = seq_of({a, b});
  VideoSequence translated = seq_of({ta, tb});
  const std::vector<FlowField> flows = {flow};
  const double got = warping_error(translated, source, flows, 50.0);
  const double want = oracles::naive_warping_error({ta, tb}, {a, b}, {flow}, 50.0);
  CHECK(got == doctest::Approx(want).epsilon(1e-6));
}

TEST_CASE("warping error is invariant to constant intensity shifts of the translation") {
  Rng rng(3);
  Tensor a = Tensor::uniform({1, 3, 8, 8}, rng, -0.4f, 0.4f);
  Tensor b = Tensor::uniform({1, 3, 8, 8}, rng, -0.4f, 0.4f);
  Tensor ta = Tensor::uniform({1, 3, 8, 8}, rng, -0.4f, 0.4f);
  Tensor tb = Tensor::uniform({1, 3, 8, 8}, rng, -0.4f, 0.4f);
  FlowField flow(8, 8);
  for (std::size_t i = 0; i < flow.pixels(); ++i) {
    flow.dx[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
    flow.dy[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
  }
  VideoSequence source = seq_of({a, b});
  const std::vector<FlowField> flows = {flow};
  const double base = warping_error(seq_of({ta, tb}), source, flows, 50.0);
  Tensor ta2 = ta.clone(), tb2 = tb.clone();
  for (std::int64_t i = 0; i < ta2.numel(); ++i) {
    ta2[i] += 0.07f;
    tb2[i] += 0.07f;
  }
  const double shifted = warping_error(seq_of({ta2, tb2}), source, flows, 50.0);
  CHECK(shifted == doctest::Approx(base).epsilon(1e-5));
}

TEST_CASE("warping error validates lengths") {
  Rng rng(4);
  const Tensor f = Tensor::uniform({1, 3, 4, 4}, rng, -1.f, 1.f);
  VideoSequence s = seq_of({f, f});
  const std::vector<FlowField> none;
  CHECK_THROWS_AS(warping_error(s, s, none, 50.0), ShapeError);
}

TEST_CASE("segmentation scores: hand-computed 2x2 case") {
  const std::vector<std::vector<std::uint8_t>> gt = {{0, 0, 1, 1}};
  const std::vector<std::vector<std::uint8_t>> pred = {{0, 1, 1, 1}};
  const SegScores s = segmentation_scores(pred, gt, 2);
  CHECK(s.mp == doctest::Approx(0.75));
  CHECK(s.ac == doctest::Approx(0.75));
  CHECK(s.miou == doctest::Approx(7.0 / 12.0));
}

TEST_CASE("perfect prediction scores 100% everywhere") {
  Rng rng(5);
  std::vector<std::vector<std::uint8_t>> maps(3, std::vector<std::uint8_t>(25));
  for (auto& m : maps)
    for (auto& v : m) v = static_cast<std::uint8_t>(rng.below(4));
  const SegScores s = segmentation_scores(maps, maps, 4);
  CHECK(s.mp == doctest::Approx(1.0));
  CHECK(s.ac == doctest::Approx(1.0));
  CHECK(s.miou == doctest::Approx(1.0));
}

TEST_CASE("segmentation scores match the counting reference on random maps") {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const int classes = 2 + static_cast<int>(rng.below(4));
    std::vector<std::vector<std::uint8_t>> pred(2), gt(2);
    for (int m = 0; m < 2; ++m) {
      pred[m].resize(64 * 64);
      gt[m].resize(64 * 64);
      for (std::size_t i = 0; i < pred[m].size(); ++i) {
        pred[m][i] = static_cast<std::uint8_t>(rng.below(static_cast<std::uint64_t>(classes)));
        gt[m][i] = static_cast<std::uint8_t>(rng.below(static_cast<std::uint64_t>(classes)));
      }
    }
    const SegScores s = segmentation_scores(pred, gt, classes);
    const auto want = oracles::naive_segmentation(pred, gt, classes);
    CHECK(s.mp == doctest::Approx(want.mp).epsilon(1e-12));
    CHECK(s.ac == doctest::Approx(want.ac).epsilon(1e-12));
    CHECK(s.miou == doctest::Approx(want.miou).epsilon(1e-12));
    CHECK(s.mp >= s.miou);  // confusion-matrix algebra
  }
}

TEST_CASE("classes absent from ground truth are excluded") {
  const std::vector<std::vector<std::uint8_t>> gt = {{0, 0, 0, 0}};
  const std::vector<std::vector<std::uint8_t>> pred = {{0, 0, 2, 0}};
  const SegScores s = segmentation_scores(pred, gt, 3);
  // only class 0 is present: 3 of its 4 pixels hit, nothing else enters
  CHECK(s.ac == doctest::Approx(0.75));
  CHECK(s.miou == doctest::Approx(0.75));
  CHECK(s.per_class_iou[1] == -1.0);
  CHECK(s.per_class_iou[2] == -1.0);
  CHECK(s.gt_pixels_per_class[0] == 4);
}

TEST_CASE("class ids out of range are rejected") {
  const std::vector<std::vector<std::uint8_t>> gt = {{0, 3}};
  const std::vector<std::vector<std::uint8_t>> pred = {{0, 0}};
  CHECK_THROWS_AS(segmentation_scores(pred, gt, 2), ShapeError);
}

TEST_CASE("evaluate_run end to end") {
  const auto root = fs::temp_directory_path() / "psf_eval_ds";
  fs::remove_all(root);
  SceneConfig cfg;
  cfg.width = 48;
  cfg.height = 48;
  cfg.frames_per_clip = 5;
  write_root_manifest(root, cfg, 55, 1, 2);
  generate_split(cfg, 55, Split::train, 1, root);
  generate_split(cfg, 55, Split::val, 2, root);

  SUBCASE("identity translation scores the source oracle") {
    const Network identity = make_pointwise_linear<float>(3, 1.f, 0.f);
    const EvalReport report = evaluate_run(identity, root, 50.0, "{}");
    CHECK(report.warping_status == "ok");
    CHECK(report.segmentation_status == "ok");
    REQUIRE(report.clips.size() == 2);
    for (const auto& c : report.clips)
      CHECK(c.warp_error == doctest::Approx(c.oracle_warp_error).epsilon(1e-6));
    CHECK(report.warp_mean == doctest::Approx(report.oracle_warp_mean).epsilon(1e-6));
    // aggregate equals the mean of per-clip values
    double mean = 0;
    for (const auto& c : report.clips) mean += c.warp_error;
    mean /= static_cast<double>(report.clips.size());
    CHECK(report.warp_mean == doctest::Approx(mean).epsilon(1e-9));
    // reports serialize
    CHECK(report.to_json().find("\"metric_version\"") != std::string::npos);
    CHECK(report.to_csv().find("aggregate") != std::string::npos);
  }
  SUBCASE("an empty val split reports skipped metrics") {
    const auto empty_root = fs::temp_directory_path() / "psf_eval_empty";
    fs::remove_all(empty_root);
    write_root_manifest(empty_root, cfg, 1, 0, 0);
    generate_split(cfg, 1, Split::val, 0, empty_root);
    const Network identity = make_pointwise_linear<float>(3, 1.f, 0.f);
    const EvalReport report = evaluate_run(identity, empty_root, 50.0, "{}");
    CHECK(report.warping_status.rfind("skipped", 0) == 0);
    CHECK(report.segmentation_status.rfind("skipped", 0) == 0);
    CHECK(report.clips.empty());
  }
}

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "pseudoflow/dataset.hpp"
#include "pseudoflow/warp.hpp"

using namespace pseudoflow;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

SceneConfig small_cfg() {
  SceneConfig cfg;
  cfg.width = 48;
  cfg.height = 48;
  cfg.frames_per_clip = 6;
  return cfg;
}

}  // namespace

TEST_CASE("frame quantization round trip stays within one step") {
  Rng rng(1);
  Tensor t = Tensor::uniform({1, 3, 9, 11}, rng, -1.f, 1.f);
  const Tensor back = image_to_tensor(tensor_to_image(t));
  for (std::int64_t i = 0; i < t.numel(); ++i)
    CHECK(std::abs(back[i] - t[i]) <= 1.0f / 255.0f + 1e-6f);
}

TEST_CASE("representable levels round trip exactly") {
  for (const int v : {0, 1, 17, 127, 128, 254, 255}) {
    ImageU8 img(1, 1, 3);
    img.pixels = {static_cast<std::uint8_t>(v), 0, 255};
    const ImageU8 back = tensor_to_image(image_to_tensor(img));
    CHECK(back.pixels[0] == v);
    CHECK(back.pixels[1] == 0);
    CHECK(back.pixels[2] == 255);
  }
}

TEST_CASE("png io round trip is lossless") {
  const auto dir = fresh_dir("psf_png");
  Rng rng(2);
  ImageU8 img(13, 7, 3);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  write_png(dir / "a.png", img);
  const ImageU8 back = read_png(dir / "a.png");
  REQUIRE(back.width == img.width);
  REQUIRE(back.height == img.height);
  CHECK(back.pixels == img.pixels);
  CHECK_THROWS_AS(read_png(dir / "missing.png"), IoError);
}

TEST_CASE("palette encode/decode") {
  const Palette pal = Palette::default_shapes();
  SUBCASE("round trip is exact") {
    Rng rng(3);
    std::vector<std::uint8_t> ids(64);
    for (auto& v : ids) v = static_cast<std::uint8_t>(rng.below(pal.size()));
    const ImageU8 img = labels_encode(ids, 8, 8, pal);
    CHECK(labels_decode(img, pal) == ids);
  }
  SUBCASE("equidistant pixels break ties toward the lower class id") {
    // (136,126,78) is exactly equidistant from class 1 (200,64,64) and
    // class 2 (72,188,92), and farther from every other class.
    ImageU8 img(1, 1, 3);
    img.pixels = {136, 126, 78};
    const auto ids = labels_decode(img, pal);
    CHECK(ids[0] == 1);
  }
  SUBCASE("unknown ids are rejected on encode") {
    std::vector<std::uint8_t> ids = {9};
    CHECK_THROWS_AS(labels_encode(ids, 1, 1, pal), ConfigError);
  }
  SUBCASE("gaussian pixel noise rarely flips the decoded class") {
    Rng rng(4);
    std::vector<std::uint8_t> ids(48 * 48);
    for (auto& v : ids) v = static_cast<std::uint8_t>(rng.below(pal.size()));
    ImageU8 img = labels_encode(ids, 48, 48, pal);
    for (auto& p : img.pixels) {
      const double noisy = p + rng.normal(0.0, 0.05 * 255.0);
      p = static_cast<std::uint8_t>(std::clamp(noisy, 0.0, 255.0));
    }
    const auto decoded = labels_decode(img, pal);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) correct += decoded[i] == ids[i];
    CHECK(static_cast<double>(correct) / ids.size() >= 0.99);
  }
}

TEST_CASE("static scenes have identically zero flow") {
  SceneConfig cfg = small_cfg();
  cfg.max_speed = 0;
  cfg.max_drift = 0;
  const Scene sc = make_scene(cfg, 17);
  const FlowField f = scene_backward_flow(sc, 1);
  for (std::size_t i = 0; i < f.pixels(); ++i) {
    CHECK(f.dx[i] == 0.f);
    CHECK(f.dy[i] == 0.f);
  }
}

TEST_CASE("an object moving (+2,0) carries backward flow dx = -2") {
  SceneConfig cfg = small_cfg();
  Scene sc = make_scene(cfg, 5);
  sc.objects.resize(1);
  sc.bg_vx = sc.bg_vy = 0;
  sc.objects[0].kind = ShapeKind::circle;
  sc.objects[0].size = 9;
  sc.objects[0].x0 = 18;
  sc.objects[0].y0 = 24;
  sc.objects[0].vx = 2;
  sc.objects[0].vy = 0;
  const int t = 2;
  const FlowField f = scene_backward_flow(sc, t);
  const auto layers = layer_map(sc, t);
  int inside = 0, outside = 0;
  for (int y = 0; y < sc.height; ++y)
    for (int x = 0; x < sc.width; ++x) {
      const std::size_t i = f.index(x, y);
      if (layers[i] == 1) {
        CHECK(f.dx[i] == -2.f);
        CHECK(f.dy[i] == 0.f);
        ++inside;
      } else {
        CHECK(f.dx[i] == 0.f);
        ++outside;
      }
    }
  CHECK(inside > 100);
  CHECK(outside > 100);
}

TEST_CASE("gt flow reconstructs the next frame away from occlusions and edges") {
  SceneConfig cfg = small_cfg();
  cfg.frames_per_clip = 4;
  for (const std::uint64_t seed : {11ull, 12ull, 13ull}) {
    const Scene sc = make_scene(cfg, seed);
    for (int t = 1; t < sc.frames; ++t) {
      const Tensor prev = image_to_tensor(render_textured(sc, t - 1));
      const Tensor cur = image_to_tensor(render_textured(sc, t));
      const FlowField flow = scene_backward_flow(sc, t);
      const Tensor recon = backward_warp<float>(nullptr, prev, flow, Border::clamp);

      const auto layers_t = layer_map(sc, t);
      const auto layers_p = layer_map(sc, t - 1);
      const int w = sc.width, h = sc.height;
      auto near_boundary = [&](const std::vector<std::uint8_t>& m, int x, int y) {
        for (int dy = -2; dy <= 2; ++dy)
          for (int dx = -2; dx <= 2; ++dx) {
            const int xx = std::clamp(x + dx, 0, w - 1);
            const int yy = std::clamp(y + dy, 0, h - 1);
            if (m[static_cast<std::size_t>(yy) * w + xx] != m[static_cast<std::size_t>(y) * w + x])
              return true;
          }
        return false;
      };

      int checked = 0;
      for (int y = 2; y < h - 2; ++y)
        for (int x = 2; x < w - 2; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * w + x;
          const int sx = static_cast<int>(std::lround(x + flow.dx[i]));
          const int sy = static_cast<int>(std::lround(y + flow.dy[i]));
          if (sx < 2 || sx >= w - 2 || sy < 2 || sy >= h - 2) continue;
          if (layers_t[i] != layers_p[static_cast<std::size_t>(sy) * w + sx]) continue;
          if (near_boundary(layers_t, x, y) || near_boundary(layers_p, sx, sy)) continue;
          ++checked;
          for (int c = 0; c < 3; ++c) {
            const std::int64_t k = c * w * h + y * w + x;
            CHECK(std::abs(cur[k] - recon[k]) <= 0.02f);
          }
        }
      CHECK(checked > 500);
    }
  }
}

TEST_CASE("dataset generation, layout and loading") {
  const auto root = fresh_dir("psf_dataset");
  SceneConfig cfg = small_cfg();
  write_root_manifest(root, cfg, 77, 2, 1);
  generate_split(cfg, 77, Split::train, 2, root);
  generate_split(cfg, 77, Split::val, 1, root);

  SUBCASE("layout follows the documented naming") {
    CHECK(fs::exists(root / "manifest.json"));
    CHECK(fs::exists(root / "domainX/train/clip_0000/frame_00000.png"));
    CHECK(fs::exists(root / "domainX/train/clip_0001/manifest.json"));
    CHECK(fs::exists(root / "domainY/train/clip_0000/frame_00005.png"));
    CHECK(fs::exists(root / "domainX/val/clip_0000/flow_00001.flo"));
    CHECK(fs::exists(root / "domainX/val/clip_0000/labels_00000.png"));
    CHECK(!fs::exists(root / "domainX/train/clip_0000/flow_00001.flo"));
    CHECK(!fs::exists(root / "domainY/val/clip_0000/flow_00001.flo"));
  }
  SUBCASE("clips load with their ground truth attachments") {
    const VideoSequence val = read_clip(root / "domainX/val/clip_0000");
    CHECK(val.size() == 6);
    CHECK(val.gt_flow.size() == 5);
    CHECK(val.labels.size() == 6);
    CHECK(val.clip_id == 10000);
    const VideoSequence train = read_clip(root / "domainX/train/clip_0000");
    CHECK(train.gt_flow.empty());
    CHECK(train.labels.empty());
    CHECK(train.clip_id == 0);
  }
  SUBCASE("train domains are unpaired") {
    const VideoSequence x0 = read_clip(root / "domainX/train/clip_0000");
    const VideoSequence y0 = read_clip(root / "domainY/train/clip_0000");
    CHECK(x0.clip_id != y0.clip_id);
    // different scene streams: label maps of the underlying scenes differ
    double diff = 0;
    for (std::int64_t i = 0; i < x0.frames[0].numel(); ++i)
      diff += std::abs(x0.frames[0][i] - y0.frames[0][i]);
    CHECK(diff / x0.frames[0].numel() > 0.01);
  }
  SUBCASE("missing frames are reported with their index") {
    fs::remove(root / "domainX/train/clip_0000/frame_00003.png");
    CHECK_THROWS_WITH_AS(read_clip(root / "domainX/train/clip_0000"),
                         doctest::Contains("missing frame 3"), FormatError);
  }
  SUBCASE("training loader flattens clips") {
    const FrameDataset ds = load_training_frames(root, kDomainY);
    CHECK(ds.size() == 12);  // 2 clips x 6 frames
    CHECK(ds.width == 48);
  }
}

TEST_CASE("an empty dataset still carries a valid manifest") {
  const auto root = fresh_dir("psf_dataset_empty");
  SceneConfig cfg = small_cfg();
  write_root_manifest(root, cfg, 1, 0, 0);
  generate_split(cfg, 1, Split::train, 0, root);
  const DatasetInfo info = read_root_manifest(root);
  CHECK(info.width == 48);
  CHECK(list_clips(root, kDomainX, Split::train).empty());
}

TEST_CASE("write_clip/read_clip round trip within quantization") {
  const auto dir = fresh_dir("psf_clip_rt");
  Rng rng(5);
  VideoSequence seq;
  seq.width = 16;
  seq.height = 12;
  seq.domain = kDomainX;
  seq.clip_id = 42;
  for (int t = 0; t < 3; ++t)
    seq.frames.push_back(Tensor::uniform({1, 3, 12, 16}, rng, -1.f, 1.f));
  seq.gt_flow.emplace_back(16, 12);
  seq.gt_flow.emplace_back(16, 12);
  write_clip(dir / "clip", seq);
  const VideoSequence back = read_clip(dir / "clip");
  REQUIRE(back.size() == 3);
  REQUIRE(back.gt_flow.size() == 2);
  for (int t = 0; t < 3; ++t)
    for (std::int64_t i = 0; i < seq.frames[0].numel(); ++i)
      CHECK(std::abs(back.frames[t][i] - seq.frames[t][i]) <= 1.0f / 255.0f + 1e-6f);
}

TEST_CASE("sequence structural checks") {
  VideoSequence seq;
  seq.width = 4;
  seq.height = 4;
  seq.frames.push_back(Tensor::zeros({1, 3, 4, 4}));
  seq.frames.push_back(Tensor::zeros({1, 3, 4, 4}));
  seq.gt_flow.emplace_back(4, 4);
  CHECK_NOTHROW(seq.check());
  seq.gt_flow.emplace_back(4, 4);
  CHECK_THROWS_AS(seq.check(), FormatError);  // |flow| must be |frames|-1
}

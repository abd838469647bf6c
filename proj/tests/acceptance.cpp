// Acceptance suite: one pass/fail line per criterion, exit 0 only if all
// pass. Criterion 6 trains the full experiment matrix and dominates the
// runtime; --only N runs a subset, --iters/--seeds shrink the training
// budget for pilot runs.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "pseudoflow/gradcheck.hpp"
#include "pseudoflow/metrics.hpp"
#include "pseudoflow/presets.hpp"
#include "pseudoflow/trainer.hpp"
#include "pseudoflow/warp.hpp"

using namespace pseudoflow;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  int id;
  std::string name;
  bool pass = false;
  std::string detail;
};

std::vector<Criterion> g_results;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  g_results.push_back({id, name, pass, detail});
  std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << id << ": " << name
            << (detail.empty() ? "" : " -- " + detail) << std::endl;
}

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// ----------------------------------------------------------------- 1 ------

void criterion_gradients() {
  const double t0 = now_seconds();
  const GradCheckReport report_ops = check_op_suite(100, 1e-4, 0x5eedULL);
  const double secs = now_seconds() - t0;
  double worst = 0;
  for (const auto& e : report_ops.entries) worst = std::max(worst, e.max_rel_err);
  const bool pass = report_ops.passed() && secs < 120.0;
  report(1, "gradient suite (all ops + composite net, 100 cases, 64-bit)", pass,
         "max rel err " + fmt(worst) + ", " + fmt(secs) + " s");
  if (!report_ops.passed()) std::cout << report_ops.summary() << std::endl;
}

// ----------------------------------------------------------------- 2 ------

void criterion_warp() {
  bool pass = true;
  std::string detail;

  {  // zero-flow identity
    Rng rng(1);
    const Tensor img = Tensor::randn({1, 3, 15, 11}, rng);
    const Tensor out = backward_warp<float>(nullptr, img, FlowField(11, 15), Border::clamp);
    double err = 0;
    for (std::int64_t i = 0; i < img.numel(); ++i)
      err = std::max<double>(err, std::abs(out[i] - img[i]));
    if (err > 1e-6) {
      pass = false;
      detail += "zero-flow identity err " + fmt(err) + "; ";
    }
  }
  {  // integer flow vs gather oracle, exact
    Rng rng(2);
    const Tensor img = Tensor::randn({1, 2, 9, 12}, rng);
    FlowField f(12, 9);
    std::vector<int> dx(f.pixels()), dy(f.pixels());
    for (std::size_t i = 0; i < f.pixels(); ++i) {
      dx[i] = static_cast<int>(rng.below(11)) - 5;
      dy[i] = static_cast<int>(rng.below(11)) - 5;
      f.dx[i] = static_cast<float>(dx[i]);
      f.dy[i] = static_cast<float>(dy[i]);
    }
    const Tensor got = backward_warp<float>(nullptr, img, f, Border::clamp);
    const Tensor want = oracles::gather_with_clamp(img, dx, dy);
    for (std::int64_t i = 0; i < got.numel() && pass; ++i)
      if (got[i] != want[i]) {
        pass = false;
        detail += "integer-flow mismatch; ";
      }
  }
  {  // fractional ramp
    Tensor img({1, 1, 1, 4}, {0.f, 1.f, 2.f, 3.f});
    FlowField f(4, 1);
    std::fill(f.dx.begin(), f.dx.end(), 0.5f);
    const Tensor out = backward_warp<float>(nullptr, img, f, Border::clamp);
    const float want[4] = {0.5f, 1.5f, 2.5f, 3.0f};
    for (int i = 0; i < 4; ++i)
      if (std::abs(out[i] - want[i]) > 1e-6) {
        pass = false;
        detail += "ramp case; ";
      }
  }
  {  // pointwise-linear commutation
    Rng rng(3);
    const Tensor64 img = Tensor64::uniform({1, 3, 20, 20}, rng, -1, 1);
    FlowSpec spec;
    const FlowField f = synthesize_flow(spec, 20, 20, 4);
    const double m[3][3] = {{0.4, 0.3, -0.2}, {0.1, 0.9, 0.2}, {-0.3, 0.2, 1.1}};
    const double bias[3] = {0.1, -0.05, 0.2};
    auto apply_l = [&](const Tensor64& t) {
      Tensor64 out(t.shape());
      const std::int64_t plane = 400;
      for (std::int64_t c = 0; c < 3; ++c)
        for (std::int64_t i = 0; i < plane; ++i) {
          double acc = bias[c];
          for (std::int64_t k = 0; k < 3; ++k) acc += m[c][k] * t[k * plane + i];
          out[c * plane + i] = acc;
        }
      return out;
    };
    const Tensor64 lw = backward_warp<double>(nullptr, apply_l(img), f, Border::clamp);
    const Tensor64 wl = apply_l(backward_warp<double>(nullptr, img, f, Border::clamp));
    double err = 0;
    for (std::int64_t i = 0; i < lw.numel(); ++i) err = std::max(err, std::abs(lw[i] - wl[i]));
    if (err > 1e-6) {
      pass = false;
      detail += "commutation err " + fmt(err) + "; ";
    }
  }
  report(2, "warp correctness (identity, integer gather, ramp, commutation)", pass,
         pass ? "all four checks exact within tolerance" : detail);
}

// ----------------------------------------------------------------- 3 ------

void criterion_flow() {
  bool pass = true;
  std::string detail;
  {  // fast vs naive, defaults at 256
    FlowSpec s;
    const FlowField fast = synthesize_flow(s, 256, 256, 42);
    const FlowField naive = oracles::naive_flow_pipeline(scale_spec(s, 256, 256), 256, 256, 42);
    double err = 0;
    for (std::size_t i = 0; i < fast.pixels(); ++i) {
      err = std::max<double>(err, std::abs(fast.dx[i] - naive.dx[i]));
      err = std::max<double>(err, std::abs(fast.dy[i] - naive.dy[i]));
    }
    if (err >= 1e-5) {
      pass = false;
      detail += "fast-vs-naive err " + fmt(err) + "; ";
    } else {
      detail += "fast==naive within " + fmt(err) + "; ";
    }
  }
  {  // translation-only constant
    FlowSpec s;
    s.mode = FlowMode::translation_only;
    const FlowField f = synthesize_flow(s, 33, 19, 9);
    for (std::size_t i = 1; i < f.pixels(); ++i)
      if (f.dx[i] != f.dx[0] || f.dy[i] != f.dy[0]) {
        pass = false;
        detail += "translation-only not constant; ";
        break;
      }
  }
  {  // exact scaling arithmetic at 64
    const FlowSpec r = scale_spec(FlowSpec{}, 64, 64);
    if (!(r.block == 25 && r.filter == 25 && r.sigma_m == 2.0 && r.sigma_s == 2.5)) {
      pass = false;
      detail += "64px scaling got block " + std::to_string(r.block) + " filter " +
                std::to_string(r.filter) + " sigma_m " + fmt(r.sigma_m) + " sigma_s " +
                fmt(r.sigma_s) + "; ";
    }
  }
  report(3, "flow synthesis fidelity (naive agreement, modes, parameter scaling)", pass, detail);
}

// ----------------------------------------------------------------- 4 ------

void criterion_losses() {
  bool pass = true;
  std::string detail;
  Rng rng(4);
  const Tensor64 x = Tensor64::uniform({1, 3, 16, 16}, rng, -0.8, 0.8);
  const Tensor64 y = Tensor64::uniform({1, 3, 16, 16}, rng, -0.8, 0.8);
  NoiseSpec off;
  off.enabled = false;
  SuppressionFlags none;
  FlowSpec spec;
  const FlowDraw flow = synthesize_flow_draw(spec, 16, 16, 5);

  {  // identity generators
    const auto gid = make_pointwise_linear<double>(3, 1.0, 0.0);
    Rng nr(1);
    const double ur =
        unsupervised_recycle_loss<double>(nullptr, x, y, gid, gid, flow, off, none, nr).item();
    const double us =
        unsupervised_spatial_loss<double>(nullptr, x, y, gid, gid, flow, off, none, nr).item();
    const double cyc = cycle_loss<double>(nullptr, x, y, gid, gid).item();
    if (std::abs(ur) > 1e-6 || std::abs(us) > 1e-6 || std::abs(cyc) > 1e-6) {
      pass = false;
      detail += "identity losses ur " + fmt(ur) + " us " + fmt(us) + " cyc " + fmt(cyc) + "; ";
    }
  }
  {  // zero flow, arbitrary generators
    FlowDraw zero;
    zero.real = std::make_shared<FlowField>(16, 16);
    zero.translated = zero.real;
    const auto ga = build_generator<double>(GeneratorConfig{3, 3, 4, 1, 1}, 6);
    const auto gb = build_generator<double>(GeneratorConfig{3, 3, 4, 1, 1}, 7);
    Rng nr(1);
    const double us =
        unsupervised_spatial_loss<double>(nullptr, x, y, ga, gb, zero, off, none, nr).item();
    if (std::abs(us) > 1e-6) {
      pass = false;
      detail += "zero-flow us " + fmt(us) + "; ";
    }
  }
  {  // pointwise-linear generator: X-side spatial term only
    NetworkT<double> gy = make_pointwise_linear<double>(3, 1.0, 0.0);
    auto& conv = std::get<ConvLayerT<double>>(gy.layers[0]);
    Rng mix(8);
    for (std::int64_t i = 0; i < conv.w.numel(); ++i) conv.w[i] = mix.uniform(-0.5, 0.5);
    for (std::int64_t i = 0; i < conv.b.numel(); ++i) conv.b[i] = mix.uniform(-0.2, 0.2);
    const auto gx = make_pointwise_linear<double>(3, 0.7, 0.05);
    SuppressionFlags x_only;  // keep only the term built from x_t
    x_only.suppress_x_domain = true;
    Rng nr(1);
    const double us_term =
        unsupervised_spatial_loss<double>(nullptr, x, y, gx, gy, flow, off, x_only, nr).item();
    if (us_term > 1e-6) {
      pass = false;
      detail += "linear-generator us term " + fmt(us_term) + "; ";
    } else {
      detail += "linear us term " + fmt(us_term) + "; ";
    }
  }
  report(4, "loss identities (identity nets, zero flow, pointwise-linear commutation)", pass,
         detail);
}

// ----------------------------------------------------------------- 5 ------

void criterion_metrics() {
  bool pass = true;
  std::string detail;
  {  // Eq-style warping error vs brute force
    Rng rng(5);
    std::vector<Tensor> src, tr;
    for (int t = 0; t < 2; ++t) {
      src.push_back(Tensor::uniform({1, 3, 4, 4}, rng, -0.8f, 0.8f));
      tr.push_back(Tensor::uniform({1, 3, 4, 4}, rng, -0.8f, 0.8f));
    }
    FlowField flow(4, 4);
    for (std::size_t i = 0; i < flow.pixels(); ++i) {
      flow.dx[i] = static_cast<float>(rng.uniform(-1.5, 1.5));
      flow.dy[i] = static_cast<float>(rng.uniform(-1.5, 1.5));
    }
    VideoSequence source, translated;
    source.width = translated.width = 4;
    source.height = translated.height = 4;
    source.frames = src;
    translated.frames = tr;
    const std::vector<FlowField> flows = {flow};
    const double got = warping_error(translated, source, flows, 50.0);
    const double want = oracles::naive_warping_error(tr, src, {flow}, 50.0);
    if (std::abs(got - want) > 1e-6) {
      pass = false;
      detail += "warping vs brute force " + fmt(got) + " vs " + fmt(want) + "; ";
    }
  }
  {  // segmentation vs counting oracle, including the 2x2 case
    const std::vector<std::vector<std::uint8_t>> gt = {{0, 0, 1, 1}};
    const std::vector<std::vector<std::uint8_t>> pred = {{0, 1, 1, 1}};
    const SegScores s = segmentation_scores(pred, gt, 2);
    if (std::abs(s.mp - 0.75) > 1e-12 || std::abs(s.ac - 0.75) > 1e-12 ||
        std::abs(s.miou - 7.0 / 12.0) > 1e-12) {
      pass = false;
      detail += "2x2 case MP " + fmt(s.mp) + " AC " + fmt(s.ac) + " mIoU " + fmt(s.miou) + "; ";
    }
    Rng rng(6);
    for (int trial = 0; trial < 8; ++trial) {
      std::vector<std::vector<std::uint8_t>> p(1), g(1);
      p[0].resize(64 * 64);
      g[0].resize(64 * 64);
      for (std::size_t i = 0; i < p[0].size(); ++i) {
        p[0][i] = static_cast<std::uint8_t>(rng.below(5));
        g[0][i] = static_cast<std::uint8_t>(rng.below(5));
      }
      const SegScores got = segmentation_scores(p, g, 5);
      const auto want = oracles::naive_segmentation(p, g, 5);
      if (std::abs(got.mp - want.mp) > 1e-12 || std::abs(got.ac - want.ac) > 1e-12 ||
          std::abs(got.miou - want.miou) > 1e-12) {
        pass = false;
        detail += "random map disagreement; ";
        break;
      }
    }
  }
  report(5, "metric oracles (Eq-style warping error, counting segmentation)", pass, detail);
}

// ----------------------------------------------------------------- 6 ------

struct RunOutcome {
  std::string label;
  std::uint64_t seed = 0;
  double warp = 0, miou = 0, oracle_warp = 0;
  double minutes = 0;
  std::int64_t iterations = 0;
};

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

void criterion_experiment(const fs::path& work, std::int64_t iters,
                          const std::vector<std::uint64_t>& seeds) {
  const fs::path data = work / "dataset";
  SceneConfig scene;  // 64x64 defaults
  const std::uint64_t dataset_seed = 777;
  const int train_clips = 50, val_clips = 6;  // 50 x 30 = 1500 frames per domain
  if (!fs::exists(data / "manifest.json")) {
    std::cout << "  [criterion 6] generating dataset under " << data << std::endl;
    write_root_manifest(data, scene, dataset_seed, train_clips, val_clips);
    generate_split(scene, dataset_seed, Split::train, train_clips, data);
    generate_split(scene, dataset_seed, Split::val, val_clips, data);
  }
  const FrameDataset dsx = load_training_frames(data, kDomainX);
  const FrameDataset dsy = load_training_frames(data, kDomainY);
  std::cout << "  [criterion 6] " << dsx.size() << " X frames, " << dsy.size() << " Y frames"
            << std::endl;

  struct Job {
    std::string preset;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto seed : seeds)
    for (const std::string preset : {"full", "adv-cyc-only", "wrong-flow", "no-noise"})
      jobs.push_back({preset, seed});

  std::vector<RunOutcome> outcomes(jobs.size());
  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      const Job& job = jobs[j];
      TrainConfig cfg = desk_full_preset();
      apply_ablation_preset(cfg, job.preset);
      cfg.seed = job.seed;
      cfg.max_iterations = iters;
      cfg.data_root = data;
      cfg.out_dir = work / ("run_" + job.preset + "_s" + std::to_string(job.seed));
      const double t0 = now_seconds();
      Trainer trainer(cfg);
      const TrainResult tr = trainer.train(dsx, dsy);
      const EvalReport ev = evaluate_run(trainer.gy(), data, 50.0, cfg.to_json());
      RunOutcome& out = outcomes[j];
      out.label = job.preset;
      out.seed = job.seed;
      out.warp = ev.warp_mean;
      out.oracle_warp = ev.oracle_warp_mean;
      out.miou = ev.seg.miou;
      out.minutes = (now_seconds() - t0) / 60.0;
      out.iterations = tr.iterations;
      {
        std::lock_guard<std::mutex> lock(log_mutex);
        std::cout << "  [criterion 6] " << job.preset << " seed " << job.seed << ": warp "
                  << fmt(out.warp) << " (oracle " << fmt(out.oracle_warp) << "), mIoU "
                  << fmt(out.miou) << ", " << fmt(out.minutes) << " min, " << out.iterations
                  << " iters" << std::endl;
        std::ofstream csv(work / "experiment_runs.csv", std::ios::app);
        csv << job.preset << ',' << job.seed << ',' << out.warp << ',' << out.oracle_warp << ','
            << out.miou << ',' << out.minutes << ',' << out.iterations << '\n';
      }
    }
  };
  {
    std::ofstream csv(work / "experiment_runs.csv", std::ios::trunc);
    csv << "preset,seed,warp,oracle_warp,miou,minutes,iterations\n";
  }
  std::thread t1(worker), t2(worker);
  t1.join();
  t2.join();

  auto median_of = [&](const std::string& preset, auto field) {
    std::vector<double> v;
    for (const auto& o : outcomes)
      if (o.label == preset) v.push_back(field(o));
    return median3(v);
  };
  const double warp_full = median_of("full", [](const RunOutcome& o) { return o.warp; });
  const double warp_base = median_of("adv-cyc-only", [](const RunOutcome& o) { return o.warp; });
  const double warp_wrong = median_of("wrong-flow", [](const RunOutcome& o) { return o.warp; });
  const double warp_nonoise = median_of("no-noise", [](const RunOutcome& o) { return o.warp; });
  const double miou_full = median_of("full", [](const RunOutcome& o) { return o.miou; });
  const double miou_base = median_of("adv-cyc-only", [](const RunOutcome& o) { return o.miou; });
  const double miou_wrong = median_of("wrong-flow", [](const RunOutcome& o) { return o.miou; });
  double worst_minutes = 0;
  for (const auto& o : outcomes) worst_minutes = std::max(worst_minutes, o.minutes);

  const bool a = warp_full <= 0.90 * warp_base;
  const bool b = miou_full >= 1.20 * miou_base;
  const bool c = warp_wrong > warp_full && miou_wrong < miou_full;
  const bool d = warp_nonoise > warp_full;
  const bool budget = worst_minutes <= 45.0;

  std::ostringstream detail;
  detail << "(a) warp full/base " << fmt(warp_full) << "/" << fmt(warp_base)
         << (a ? " ok" : " FAIL") << "; (b) mIoU full/base " << fmt(miou_full) << "/"
         << fmt(miou_base) << (b ? " ok" : " FAIL") << "; (c) wrong-flow warp " << fmt(warp_wrong)
         << " mIoU " << fmt(miou_wrong) << (c ? " ok" : " FAIL") << "; (d) no-noise warp "
         << fmt(warp_nonoise) << (d ? " ok" : " FAIL") << "; max run " << fmt(worst_minutes)
         << " min";
  report(6, "desk-scale paper-direction reproduction (medians over seeds)",
         a && b && c && d && budget, detail.str());
}

// ----------------------------------------------------------------- 7 ------

void criterion_determinism(const fs::path& work) {
  const fs::path data = work / "dataset_small";
  SceneConfig scene;
  scene.width = 32;
  scene.height = 32;
  scene.frames_per_clip = 20;
  if (!fs::exists(data / "manifest.json")) {
    write_root_manifest(data, scene, 99, 4, 0);
    generate_split(scene, 99, Split::train, 4, data);
  }
  const FrameDataset dsx = load_training_frames(data, kDomainX);
  const FrameDataset dsy = load_training_frames(data, kDomainY);

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  auto small_cfg = [&](const fs::path& out, std::int64_t max_iter) {
    TrainConfig cfg;
    cfg.seed = 31;
    cfg.epochs = 1;
    cfg.max_iterations = max_iter;
    cfg.generator = GeneratorConfig{3, 3, 8, 1, 2};
    cfg.discriminator.base_width = 8;
    cfg.discriminator.n_stride2 = 2;
    cfg.out_dir = out;
    cfg.checkpoint_interval = 0;
    return cfg;
  };

  bool pass = true;
  std::string detail;

  {  // twin runs
    fs::remove_all(work / "det_a");
    fs::remove_all(work / "det_b");
    Trainer a(small_cfg(work / "det_a", 50));
    const auto ra = a.train(dsx, dsy);
    Trainer b(small_cfg(work / "det_b", 50));
    const auto rb = b.train(dsx, dsy);
    if (slurp(ra.log_path) != slurp(rb.log_path)) {
      pass = false;
      detail += "twin 50-iteration logs differ; ";
    } else {
      detail += "twin logs identical; ";
    }
  }
  {  // split/resume
    fs::remove_all(work / "det_full");
    fs::remove_all(work / "det_split");
    Trainer full(small_cfg(work / "det_full", 50));
    const auto rf = full.train(dsx, dsy);
    {
      Trainer first(small_cfg(work / "det_split", 25));
      first.train(dsx, dsy);
    }
    auto rest_cfg = small_cfg(work / "det_split", 50);
    rest_cfg.resume = work / "det_split/ckpt_final.psfw";
    Trainer rest(rest_cfg);
    const auto rr = rest.train(dsx, dsy);
    bool same = slurp(rf.log_path) == slurp(rr.log_path);
    const Checkpoint ca = Checkpoint::load(rf.final_checkpoint);
    const Checkpoint cb = Checkpoint::load(rr.final_checkpoint);
    if (ca.names() != cb.names()) same = false;
    if (same)
      for (const auto& name : ca.names()) {
        if (name == "meta.config_json") continue;
        if (ca.record(name).raw != cb.record(name).raw) {
          same = false;
          detail += "record " + name + " differs; ";
          break;
        }
      }
    if (!same) {
      pass = false;
      detail += "resume trajectory differs; ";
    } else {
      detail += "resume reproduces the straight run";
    }
  }
  report(7, "determinism and resumability", pass, detail);
}

// ----------------------------------------------------------------- 8 ------

void criterion_roundtrips(const fs::path& work) {
  bool pass = true;
  std::string detail;
  fs::create_directories(work);

  {  // .flo bit-exact
    FlowSpec spec;
    const FlowField f = synthesize_flow(spec, 21, 17, 3);
    write_flo(work / "rt.flo", f);
    const FlowField back = read_flo(work / "rt.flo");
    for (std::size_t i = 0; i < f.pixels() && pass; ++i)
      if (std::memcmp(&back.dx[i], &f.dx[i], 4) != 0 || std::memcmp(&back.dy[i], &f.dy[i], 4) != 0) {
        pass = false;
        detail += ".flo not bit-exact; ";
      }
  }
  {  // PNG frames within one quantization step
    Rng rng(7);
    const Tensor t = Tensor::uniform({1, 3, 13, 9}, rng, -1.f, 1.f);
    write_png(work / "rt.png", tensor_to_image(t));
    const Tensor back = image_to_tensor(read_png(work / "rt.png"));
    for (std::int64_t i = 0; i < t.numel(); ++i)
      if (std::abs(back[i] - t[i]) > 1.0f / 255.0f + 1e-6f) {
        pass = false;
        detail += "png round trip out of bounds; ";
        break;
      }
  }
  {  // checkpoint bit-exact through a real trainer state
    TrainConfig cfg;
    cfg.generator = GeneratorConfig{3, 3, 6, 1, 1};
    cfg.discriminator.base_width = 6;
    cfg.discriminator.n_stride2 = 2;
    cfg.out_dir = work / "ckpt_rt";
    Trainer trainer(cfg);
    trainer.save_checkpoint(work / "rt.psfw");
    const Checkpoint back = Checkpoint::load(work / "rt.psfw");
    for (const auto& [name, p] : trainer.gx().parameters()) {
      const Tensor loaded = back.get_f32("gx." + name);
      if (std::memcmp(loaded.data().data(), p->data().data(),
                      static_cast<std::size_t>(p->numel()) * 4) != 0) {
        pass = false;
        detail += "checkpoint parameter bytes differ; ";
        break;
      }
    }
  }
  {  // palette codec exact
    const Palette pal = Palette::default_shapes();
    Rng rng(8);
    std::vector<std::uint8_t> ids(40 * 25);
    for (auto& v : ids) v = static_cast<std::uint8_t>(rng.below(pal.size()));
    if (labels_decode(labels_encode(ids, 40, 25, pal), pal) != ids) {
      pass = false;
      detail += "palette codec roundtrip failed; ";
    }
  }
  report(8, "format round trips (.flo, PNG, checkpoint, palette)", pass,
         pass ? "all bit-exact / within quantization" : detail);
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  std::int64_t iters = 1500;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  fs::path work = "acceptance_work";
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    auto next = [&](const char* what) -> std::string {
      if (i + 1 >= argc) {
        std::cerr << "missing value for " << what << std::endl;
        std::exit(2);
      }
      return argv[++i];
    };
    if (arg == "--only") {
      only.insert(std::atoi(next("--only").c_str()));
    } else if (arg == "--iters") {
      iters = std::atoll(next("--iters").c_str());
    } else if (arg == "--seeds") {
      seeds.clear();
      std::istringstream ss(next("--seeds"));
      std::string tok;
      while (std::getline(ss, tok, ',')) seeds.push_back(std::stoull(tok));
    } else if (arg == "--work") {
      work = next("--work");
    } else {
      std::cerr << "usage: acceptance [--only N]... [--iters N] [--seeds a,b,c] [--work dir]"
                << std::endl;
      return 2;
    }
  }
  fs::create_directories(work);
  auto want = [&](int id) { return only.empty() || only.count(id) > 0; };

  if (want(1)) criterion_gradients();
  if (want(2)) criterion_warp();
  if (want(3)) criterion_flow();
  if (want(4)) criterion_losses();
  if (want(5)) criterion_metrics();
  if (want(6)) criterion_experiment(work, iters, seeds);
  if (want(7)) criterion_determinism(work);
  if (want(8)) criterion_roundtrips(work);

  int failed = 0;
  for (const auto& c : g_results) failed += c.pass ? 0 : 1;
  std::cout << (failed == 0 ? "acceptance: all criteria passed"
                            : "acceptance: " + std::to_string(failed) + " criterion(s) failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}

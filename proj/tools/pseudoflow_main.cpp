#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>

#include "pseudoflow/config.hpp"
#include "pseudoflow/gradcheck.hpp"
#include "pseudoflow/metrics.hpp"
#include "pseudoflow/presets.hpp"
#include "pseudoflow/warp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pseudoflow;

namespace {

bool g_json_errors = false;

void report_error(const std::string& kind, const std::string& message) {
  if (g_json_errors) {
    json j{{"error", kind}, {"message", message}};
    std::cerr << j.dump() << '\n';
  } else {
    std::cerr << "error (" << kind << "): " << message << '\n';
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

struct DatasetGenArgs {
  std::string out;
  std::uint64_t seed = 1;
  int train_clips = 50;
  int val_clips = 6;
  SceneConfig scene;
};

int cmd_dataset_gen(const DatasetGenArgs& a) {
  a.scene.validate();
  write_root_manifest(a.out, a.scene, a.seed, a.train_clips, a.val_clips);
  generate_split(a.scene, a.seed, Split::train, a.train_clips, a.out);
  generate_split(a.scene, a.seed, Split::val, a.val_clips, a.out);
  json echo{{"command", "dataset-gen"},
            {"seed", a.seed},
            {"out", a.out},
            {"train_clips", a.train_clips},
            {"val_clips", a.val_clips},
            {"width", a.scene.width},
            {"height", a.scene.height},
            {"frames_per_clip", a.scene.frames_per_clip}};
  std::cout << echo.dump() << '\n';
  return 0;
}

struct SynthFlowArgs {
  int width = 256, height = 256;
  std::uint64_t seed = 1;
  std::string out;
  std::string png;
  std::string mode = "full";
  FlowSpec spec;
};

int cmd_synth_flow(SynthFlowArgs a) {
  a.spec.mode = flow_mode_from_string(a.mode);
  const FlowField f = synthesize_flow(a.spec, a.width, a.height, a.seed);
  write_flo(a.out, f);
  if (!a.png.empty()) {
    ImageU8 img(f.width, f.height, 3);
    img.pixels = flow_debug_rgb(f);
    write_png(a.png, img);
  }
  json echo{{"command", "synth-flow"}, {"seed", a.seed}, {"out", a.out},
            {"width", a.width},        {"height", a.height}, {"mode", a.mode}};
  std::cout << echo.dump() << '\n';
  return 0;
}

struct WarpArgs {
  std::string image, flow, out;
  std::string border = "clamp";
};

int cmd_warp(const WarpArgs& a) {
  const Tensor img = image_to_tensor(read_png(a.image));
  const FlowField flow = read_flo(a.flow);
  const Border border = a.border == "zero" ? Border::zero : Border::clamp;
  const Tensor warped = backward_warp<float>(nullptr, img, flow, border);
  write_png(a.out, tensor_to_image(warped));
  json echo{{"command", "warp"}, {"image", a.image}, {"flow", a.flow}, {"out", a.out},
            {"border", a.border}};
  std::cout << echo.dump() << '\n';
  return 0;
}

struct TrainArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string data, out, resume;
  std::int64_t seed = -1;
  int epochs = -1;
};

int cmd_train(const TrainArgs& a) {
  TrainConfig cfg = a.config_path.empty() ? desk_full_preset()
                                          : train_config_from_toml(parse_toml_file(a.config_path));
  for (const auto& o : a.overrides) apply_override(cfg, o);
  if (!a.data.empty()) cfg.data_root = a.data;
  if (!a.out.empty()) cfg.out_dir = a.out;
  if (!a.resume.empty()) cfg.resume = a.resume;
  if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
  if (a.epochs >= 0) cfg.epochs = a.epochs;
  cfg.validate();
  if (cfg.data_root.empty()) throw ConfigError("train: no dataset (set [run] data_root or --data)");

  fs::create_directories(cfg.out_dir);
  write_text(cfg.out_dir / "config.json", cfg.to_json() + "\n");
  std::cout << cfg.to_json() << '\n';

  const FrameDataset dsx = load_training_frames(cfg.data_root, kDomainX);
  const FrameDataset dsy = load_training_frames(cfg.data_root, kDomainY);

  const auto t0 = std::chrono::steady_clock::now();
  Trainer trainer(cfg);
  const TrainResult result = trainer.train(dsx, dsy);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json echo{{"command", "train"},
            {"iterations", result.iterations},
            {"seconds", secs},
            {"checkpoint", result.final_checkpoint.string()},
            {"log", result.log_path.string()}};
  std::cout << echo.dump() << '\n';
  return 0;
}

struct TranslateArgs {
  std::string checkpoint, in, out;
  std::string which = "gy";
};

int cmd_translate(const TranslateArgs& a) {
  const Network net = load_generator(a.checkpoint, a.which);
  const VideoSequence in = read_clip(a.in);
  VideoSequence out = translate_sequence(net, in);
  write_clip(a.out, out);
  json echo{{"command", "translate"}, {"checkpoint", a.checkpoint}, {"which", a.which},
            {"in", a.in},             {"frames", out.frames.size()}, {"out", a.out}};
  std::cout << echo.dump() << '\n';
  return 0;
}

struct EvalArgs {
  std::string checkpoint, data, out_json, out_csv;
  double alpha = 50.0;
};

int cmd_eval(const EvalArgs& a) {
  const Network gy = load_generator(a.checkpoint, "gy");
  const Checkpoint ck = Checkpoint::load(a.checkpoint);
  const std::string echo = ck.has("meta.config_json") ? ck.get_bytes("meta.config_json") : "{}";
  const EvalReport report = evaluate_run(gy, a.data, a.alpha, echo);
  if (!a.out_json.empty()) write_text(a.out_json, report.to_json() + "\n");
  if (!a.out_csv.empty()) write_text(a.out_csv, report.to_csv());
  json summary{{"command", "eval"},
               {"warping_status", report.warping_status},
               {"warp_mean", report.warp_mean},
               {"oracle_warp_mean", report.oracle_warp_mean},
               {"segmentation_status", report.segmentation_status},
               {"mp", report.seg.mp},
               {"ac", report.seg.ac},
               {"miou", report.seg.miou}};
  std::cout << summary.dump() << '\n';
  return 0;
}

struct GradcheckArgs {
  int cases = 100;
  double tolerance = 1e-4;
  std::uint64_t seed = 20240817;
};

int cmd_gradcheck(const GradcheckArgs& a) {
  const GradCheckReport report = check_op_suite(a.cases, a.tolerance, a.seed);
  std::cout << report.summary() << '\n';
  return report.passed() ? 0 : 1;
}

struct AblateArgs {
  std::string preset;
  std::string data, out;
  std::uint64_t seed = 1;
  int epochs = 1;
  std::int64_t max_iterations = 0;
};

json run_and_eval(TrainConfig cfg, const fs::path& run_dir) {
  cfg.out_dir = run_dir;
  const FrameDataset dsx = load_training_frames(cfg.data_root, kDomainX);
  const FrameDataset dsy = load_training_frames(cfg.data_root, kDomainY);
  Trainer trainer(cfg);
  const TrainResult r = trainer.train(dsx, dsy);
  const EvalReport report = evaluate_run(trainer.gy(), cfg.data_root, 50.0, cfg.to_json());
  write_text(run_dir / "eval.json", report.to_json() + "\n");
  return json{{"iterations", r.iterations},
              {"warp_mean", report.warp_mean},
              {"oracle_warp_mean", report.oracle_warp_mean},
              {"miou", report.seg.miou},
              {"mp", report.seg.mp},
              {"ac", report.seg.ac},
              {"warping_status", report.warping_status},
              {"segmentation_status", report.segmentation_status}};
}

int cmd_ablate(const AblateArgs& a) {
  TrainConfig base = desk_full_preset();
  base.data_root = a.data;
  base.seed = a.seed;
  base.epochs = a.epochs;
  base.max_iterations = a.max_iterations;

  TrainConfig variant = base;
  apply_ablation_preset(variant, a.preset);

  const fs::path out(a.out);
  fs::create_directories(out);
  const json matched = run_and_eval(base, out / "matched");
  const json ablated = run_and_eval(variant, out / ("ablated_" + a.preset));

  json report{{"command", "ablate"},
              {"preset", a.preset},
              {"seed", a.seed},
              {"matched", matched},
              {"ablated", ablated}};
  report["direction"] = {
      {"warping_degraded", ablated["warp_mean"].get<double>() > matched["warp_mean"].get<double>()},
      {"miou_degraded", ablated["miou"].get<double>() < matched["miou"].get<double>()}};
  write_text(out / "report.json", report.dump(2) + "\n");
  std::cout << report.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pseudoflow: unpaired video translation trained against synthetic optical flow"};
  app.require_subcommand(1);
  app.add_flag("--json", g_json_errors, "emit machine-readable errors on stderr");
  app.set_help_all_flag("--help-all", "print help for every subcommand");

  std::function<int()> action;

  auto* ds = app.add_subcommand("dataset-gen", "generate the procedural two-domain video dataset");
  auto ds_args = std::make_shared<DatasetGenArgs>();
  ds->add_option("--out", ds_args->out, "dataset root directory")->required();
  ds->add_option("--seed", ds_args->seed, "master seed");
  ds->add_option("--train-clips", ds_args->train_clips, "training clips per domain");
  ds->add_option("--val-clips", ds_args->val_clips, "validation clips per domain");
  ds->add_option("--width", ds_args->scene.width, "frame width");
  ds->add_option("--height", ds_args->scene.height, "frame height");
  ds->add_option("--frames", ds_args->scene.frames_per_clip, "frames per clip");
  ds->add_option("--min-objects", ds_args->scene.min_objects, "fewest objects per scene");
  ds->add_option("--max-objects", ds_args->scene.max_objects, "most objects per scene");
  ds->add_option("--min-size", ds_args->scene.min_size, "smallest object extent, px");
  ds->add_option("--max-size", ds_args->scene.max_size, "largest object extent, px");
  ds->add_option("--max-speed", ds_args->scene.max_speed, "object speed bound, px/frame");
  ds->add_option("--max-drift", ds_args->scene.max_drift, "camera drift bound, px/frame");
  ds->add_option("--texture-amp", ds_args->scene.texture_amp, "texture noise amplitude");
  ds->add_option("--texture-scale", ds_args->scene.texture_scale, "texture feature size, px");
  ds->add_option("--hue-jitter", ds_args->scene.hue_jitter, "base color jitter");
  ds->callback([&action, ds_args] { action = [ds_args] { return cmd_dataset_gen(*ds_args); }; });

  auto* sf = app.add_subcommand("synth-flow", "synthesize a flow field and write it as .flo");
  auto sf_args = std::make_shared<SynthFlowArgs>();
  sf->add_option("--width", sf_args->width, "field width");
  sf->add_option("--height", sf_args->height, "field height");
  sf->add_option("--seed", sf_args->seed, "seed");
  sf->add_option("--out", sf_args->out, "output .flo path")->required();
  sf->add_option("--png", sf_args->png, "optional debug visualization PNG");
  sf->add_option("--mode", sf_args->mode, "full|translation_only|scaling_only|wrong_pair");
  sf->add_option("--sigma-m", sf_args->spec.sigma_m, "motion grid std");
  sf->add_option("--sigma-s", sf_args->spec.sigma_s, "shift std");
  sf->add_option("--block", sf_args->spec.block, "grid block size");
  sf->add_option("--filter", sf_args->spec.filter, "box filter size");
  sf->add_option("--scale-sigma", sf_args->spec.scale_sigma, "scaling-only mode std");
  sf->add_option("--reference-resolution", sf_args->spec.reference_resolution,
                 "resolution the parameters are quoted at");
  sf->add_flag("!--no-auto-scale", sf_args->spec.auto_scale,
               "disable parameter scaling to the field size");
  sf->callback([&action, sf_args] { action = [sf_args] { return cmd_synth_flow(*sf_args); }; });

  auto* wp = app.add_subcommand("warp", "backward-warp a PNG by a .flo field");
  auto wp_args = std::make_shared<WarpArgs>();
  wp->add_option("--image", wp_args->image, "input PNG")->required();
  wp->add_option("--flow", wp_args->flow, "flow .flo file")->required();
  wp->add_option("--out", wp_args->out, "output PNG")->required();
  wp->add_option("--border", wp_args->border, "clamp|zero");
  wp->callback([&action, wp_args] { action = [wp_args] { return cmd_warp(*wp_args); }; });

  auto* tr = app.add_subcommand("train", "train the translators");
  auto tr_args = std::make_shared<TrainArgs>();
  tr->add_option("--config", tr_args->config_path, "TOML config file");
  tr->add_option("--set", tr_args->overrides, "override: section.key=value (repeatable)");
  tr->add_option("--data", tr_args->data, "dataset root (overrides config)");
  tr->add_option("--out", tr_args->out, "run output directory (overrides config)");
  tr->add_option("--resume", tr_args->resume, "checkpoint to resume from");
  tr->add_option("--seed", tr_args->seed, "seed (overrides config)");
  tr->add_option("--epochs", tr_args->epochs, "epochs (overrides config)");
  tr->callback([&action, tr_args] { action = [tr_args] { return cmd_train(*tr_args); }; });

  auto* tl = app.add_subcommand("translate", "translate a clip directory frame by frame");
  auto tl_args = std::make_shared<TranslateArgs>();
  tl->add_option("--checkpoint", tl_args->checkpoint, "training checkpoint")->required();
  tl->add_option("--which", tl_args->which, "gx|gy (default gy: X to Y)");
  tl->add_option("--in", tl_args->in, "input clip directory")->required();
  tl->add_option("--out", tl_args->out, "output clip directory")->required();
  tl->callback([&action, tl_args] { action = [tl_args] { return cmd_translate(*tl_args); }; });

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on the validation split");
  auto ev_args = std::make_shared<EvalArgs>();
  ev->add_option("--checkpoint", ev_args->checkpoint, "training checkpoint")->required();
  ev->add_option("--data", ev_args->data, "dataset root")->required();
  ev->add_option("--json-out", ev_args->out_json, "write the JSON report here");
  ev->add_option("--csv-out", ev_args->out_csv, "write the CSV report here");
  ev->add_option("--alpha", ev_args->alpha, "occlusion mask sharpness");
  ev->callback([&action, ev_args] { action = [ev_args] { return cmd_eval(*ev_args); }; });

  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of every autodiff op");
  auto gc_args = std::make_shared<GradcheckArgs>();
  gc->add_option("--cases", gc_args->cases, "random cases per op");
  gc->add_option("--tolerance", gc_args->tolerance, "max relative error");
  gc->add_option("--seed", gc_args->seed, "seed");
  gc->callback([&action, gc_args] { action = [gc_args] { return cmd_gradcheck(*gc_args); }; });

  auto* ab = app.add_subcommand("ablate", "train matched and ablated variants, compare metrics");
  auto ab_args = std::make_shared<AblateArgs>();
  ab->add_option("--preset", ab_args->preset, "ablation preset")
      ->required()
      ->check(CLI::IsMember(ablation_preset_names()));
  ab->add_option("--data", ab_args->data, "dataset root")->required();
  ab->add_option("--out", ab_args->out, "report directory")->required();
  ab->add_option("--seed", ab_args->seed, "training seed");
  ab->add_option("--epochs", ab_args->epochs, "training epochs");
  ab->add_option("--max-iterations", ab_args->max_iterations, "hard iteration cap (0 = none)");
  ab->callback([&action, ab_args] { action = [ab_args] { return cmd_ablate(*ab_args); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    return action ? action() : 2;
  } catch (const ConfigError& e) {
    report_error("config", e.what());
    return 2;
  } catch (const Error& e) {
    report_error("runtime", e.what());
    return 1;
  } catch (const std::exception& e) {
    report_error("runtime", e.what());
    return 1;
  }
}

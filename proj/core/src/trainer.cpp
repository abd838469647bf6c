#include "pseudoflow/trainer.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

namespace pseudoflow {

using nlohmann::json;

namespace {

const char* adv_form_name(AdvForm f) {
  switch (f) {
    case AdvForm::minimax: return "minimax";
    case AdvForm::nonsaturating: return "nonsaturating";
    case AdvForm::least_squares: return "least_squares";
  }
  return "?";
}

const char* flow_mode_name(FlowMode m) {
  switch (m) {
    case FlowMode::full: return "full";
    case FlowMode::translation_only: return "translation_only";
    case FlowMode::scaling_only: return "scaling_only";
    case FlowMode::wrong_pair: return "wrong_pair";
  }
  return "?";
}

const char* sharing_name(NoiseSharing s) {
  switch (s) {
    case NoiseSharing::independent: return "independent";
    case NoiseSharing::shared: return "shared";
    case NoiseSharing::off: return "off";
  }
  return "?";
}

void fisher_yates(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[static_cast<std::size_t>(rng.below(i))]);
}

Tensor stack_frames(const FrameDataset& ds, const std::vector<std::size_t>& idx) {
  const std::int64_t b = static_cast<std::int64_t>(idx.size());
  Tensor out({b, 3, ds.height, ds.width});
  auto dst = out.mut();
  const std::int64_t plane = static_cast<std::int64_t>(ds.width) * ds.height;
  for (std::int64_t n = 0; n < b; ++n) {
    const ImageU8& img = ds.frames[idx[static_cast<std::size_t>(n)]];
    for (int y = 0; y < ds.height; ++y)
      for (int x = 0; x < ds.width; ++x)
        for (int c = 0; c < 3; ++c)
          dst[static_cast<std::size_t>(n * 3 * plane + c * plane + y * ds.width + x)] =
              u8_to_unit(img.pixels[img.index(x, y, c)]);
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("train: epochs must be >= 0");
  if (batch < 1) throw ConfigError("train: batch must be >= 1");
  if (lr <= 0) throw ConfigError("train: learning rate must be > 0");
  if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1)
    throw ConfigError("train: adam betas must lie in [0, 1)");
  if (checkpoint_interval < 0) throw ConfigError("train: checkpoint interval must be >= 0");
  weights.validate();
  flow.validate();
  noise.validate();
  suppression.validate();
  generator.validate();
  discriminator.validate();
}

std::string TrainConfig::to_json() const {
  json j;
  j["run"] = {{"seed", seed},
              {"epochs", epochs},
              {"batch", batch},
              {"max_iterations", max_iterations},
              {"resolution", resolution},
              {"checkpoint_interval", checkpoint_interval},
              {"data_root", data_root.string()},
              {"out_dir", out_dir.string()},
              {"resume", resume.string()}};
  j["optim"] = {{"lr", lr}, {"beta1", beta1}, {"beta2", beta2}, {"adam_eps", adam_eps}};
  j["adversarial"] = adv_form_name(adversarial);
  j["weights"] = {{"lambda_ur", weights.lambda_ur},
                  {"lambda_us", weights.lambda_us},
                  {"lambda_cyc", weights.lambda_cyc},
                  {"lambda_cont", weights.lambda_cont}};
  j["flow"] = {{"mode", flow_mode_name(flow.mode)},
               {"sigma_m", flow.sigma_m},
               {"sigma_s", flow.sigma_s},
               {"block", flow.block},
               {"filter", flow.filter},
               {"scale_sigma", flow.scale_sigma},
               {"reference_resolution", flow.reference_resolution},
               {"auto_scale", flow.auto_scale}};
  j["noise"] = {{"enabled", noise.enabled},
                {"sigma_low", noise.sigma_low},
                {"sigma_high", noise.sigma_high},
                {"sharing", sharing_name(noise.sharing)}};
  j["suppression"] = {{"x_domain", suppression.suppress_x_domain},
                      {"y_domain", suppression.suppress_y_domain}};
  j["generator"] = {{"in_channels", generator.in_channels},
                    {"out_channels", generator.out_channels},
                    {"base_width", generator.base_width},
                    {"n_downsample", generator.n_downsample},
                    {"n_resblocks", generator.n_resblocks}};
  j["discriminator"] = {{"in_channels", discriminator.in_channels},
                        {"base_width", discriminator.base_width},
                        {"n_stride2", discriminator.n_stride2},
                        {"extra_stride1_stage", discriminator.extra_stride1_stage}};
  return j.dump();
}

void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, std::int64_t step,
                 double lr, double beta1, double beta2, double eps, const std::string& name) {
  require_same_shape(param, grad, "adam_update");
  require_same_shape(param, m, "adam_update");
  require_same_shape(param, v, "adam_update");
  if (!grad.all_finite())
    throw NumericError("non-finite gradient for parameter '" + name + "'");
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  auto p = param.mut();
  auto mm = m.mut();
  auto vv = v.mut();
  const auto g = grad.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double gi = g[i];
    const double mi = beta1 * mm[i] + (1.0 - beta1) * gi;
    const double vi = beta2 * vv[i] + (1.0 - beta2) * gi * gi;
    mm[i] = static_cast<float>(mi);
    vv[i] = static_cast<float>(vi);
    const double mhat = mi / c1;
    const double vhat = vi / c2;
    p[i] = static_cast<float>(p[i] - lr * mhat / (std::sqrt(vhat) + eps));
  }
}

Trainer::Trainer(TrainConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) {
  cfg_.validate();
  gx_ = build_generator<float>(cfg_.generator, derive_seed(cfg_.seed, 1));
  gy_ = build_generator<float>(cfg_.generator, derive_seed(cfg_.seed, 2));
  dx_ = build_discriminator<float>(cfg_.discriminator, derive_seed(cfg_.seed, 3));
  dy_ = build_discriminator<float>(cfg_.discriminator, derive_seed(cfg_.seed, 4));
  auto init_state = [](Network& net, AdamState& st) {
    st.m.clear();
    st.v.clear();
    for (auto& [name, p] : net.parameters()) {
      st.m.push_back(Tensor::zeros(p->shape()));
      st.v.push_back(Tensor::zeros(p->shape()));
    }
    st.step = 0;
  };
  init_state(gx_, opt_gx_);
  init_state(gy_, opt_gy_);
  init_state(dx_, opt_dx_);
  init_state(dy_, opt_dy_);
  if (!cfg_.resume.empty()) {
    load_checkpoint(cfg_.resume);
    resumed_ = true;
  }
}

void Trainer::apply_adam(Network& net, AdamState& state, const GradMapT<float>& grads) {
  auto params = net.parameters();
  if (params.size() != state.m.size()) throw ShapeError("optimizer state does not match network");
  state.step += 1;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& [name, p] = params[i];
    const Tensor g = grads.get(*p);
    adam_update(*p, g, state.m[i], state.v[i], state.step, cfg_.lr, cfg_.beta1, cfg_.beta2,
                cfg_.adam_eps, name);
  }
}

LossBreakdown Trainer::train_iteration(const Tensor& batch_x, const Tensor& batch_y) {
  const std::uint64_t draw_seed = rng_.next_u64();
  const FlowDraw flow = synthesize_flow_draw(cfg_.flow, static_cast<int>(batch_x.size(3)),
                                             static_cast<int>(batch_x.size(2)), draw_seed);

  // Generator step. Discriminators act as fixed functions: their parameters
  // are detached so no gradient nodes are recorded for them.
  Tape tape;
  gx_.attach(tape);
  gy_.attach(tape);
  dx_.detach_params();
  dy_.detach_params();
  ObjectiveT<float> obj = total_objective(&tape, batch_x, batch_y, gx_, gy_, dx_, dy_, flow,
                                          cfg_.weights, cfg_.noise, cfg_.suppression,
                                          cfg_.adversarial, rng_);
  obj.breakdown.iteration = iteration_;
  obj.breakdown.draw_seed = draw_seed;
  if (!std::isfinite(obj.breakdown.total_g))
    throw TrainAbort("non-finite generator loss at iteration " + std::to_string(iteration_),
                     last_checkpoint_);
  const auto g_grads = tape.backward(obj.generator_total);
  try {
    apply_adam(gx_, opt_gx_, g_grads);
    apply_adam(gy_, opt_gy_, g_grads);
  } catch (const NumericError& e) {
    throw TrainAbort(std::string(e.what()) + " at iteration " + std::to_string(iteration_),
                     last_checkpoint_);
  }
  gx_.detach_params();
  gy_.detach_params();

  // Discriminator steps on detached fakes; generator parameters are off the
  // tape, so no gradient can reach them here.
  const Tensor fake_x = obj.fake_x.detached();
  const Tensor fake_y = obj.fake_y.detached();
  auto d_step = [&](Network& d, AdamState& st, const Tensor& real, const Tensor& fake) {
    Tape dtape;
    d.attach(dtape);
    TensorT<float> loss = adversarial_terms(&dtape, d.forward(real, &dtape),
                                            d.forward(fake, &dtape), AdvSide::discriminator,
                                            cfg_.adversarial);
    if (!std::isfinite(static_cast<double>(loss.item())))
      throw TrainAbort("non-finite discriminator loss at iteration " + std::to_string(iteration_),
                       last_checkpoint_);
    const auto grads = dtape.backward(loss);
    try {
      apply_adam(d, st, grads);
    } catch (const NumericError& e) {
      throw TrainAbort(std::string(e.what()) + " at iteration " + std::to_string(iteration_),
                       last_checkpoint_);
    }
    d.detach_params();
    return static_cast<double>(loss.item());
  };
  obj.breakdown.adv_d_x = d_step(dx_, opt_dx_, batch_x, fake_x);
  obj.breakdown.adv_d_y = d_step(dy_, opt_dy_, batch_y, fake_y);

  iteration_ += 1;
  return obj.breakdown;
}

TrainResult Trainer::train(const FrameDataset& train_x, const FrameDataset& train_y) {
  if (train_x.size() == 0 || train_y.size() == 0)
    throw ConfigError("train: both domains need at least one frame");
  if (cfg_.resolution > 0 &&
      (train_x.width != cfg_.resolution || train_x.height != cfg_.resolution ||
       train_y.width != cfg_.resolution || train_y.height != cfg_.resolution))
    throw ConfigError("train: dataset resolution " + std::to_string(train_x.width) + "x" +
                      std::to_string(train_x.height) + " does not match configured resolution " +
                      std::to_string(cfg_.resolution));
  std::filesystem::create_directories(cfg_.out_dir);
  const auto log_path = cfg_.out_dir / "train_log.csv";

  std::ofstream log;
  if (resumed_ && std::filesystem::exists(log_path)) {
    log.open(log_path, std::ios::app);
  } else {
    log.open(log_path, std::ios::trunc);
    log << LossBreakdown::csv_header() << '\n';
  }
  if (!log) throw IoError("cannot open training log: " + log_path.string());

  const bool x_drives = train_x.size() <= train_y.size();
  const FrameDataset& driving = x_drives ? train_x : train_y;
  const FrameDataset& other = x_drives ? train_y : train_x;

  const std::int64_t per_epoch = static_cast<std::int64_t>(driving.size()) / cfg_.batch;
  auto save_periodic = [&]() {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "ckpt_%06lld.psfw", static_cast<long long>(iteration_));
    const auto path = cfg_.out_dir / buf;
    save_checkpoint(path);
    last_checkpoint_ = path;
  };

  for (; epoch_ < cfg_.epochs; ++epoch_) {
    std::vector<std::size_t> order(driving.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(derive_seed(cfg_.seed, 0xE000 + static_cast<std::uint64_t>(epoch_)));
    fisher_yates(order, shuffle_rng);

    while (epoch_pos_ + cfg_.batch <= static_cast<std::int64_t>(driving.size())) {
      if (cfg_.max_iterations > 0 && iteration_ >= cfg_.max_iterations) break;
      std::vector<std::size_t> drive_idx(order.begin() + epoch_pos_,
                                         order.begin() + epoch_pos_ + cfg_.batch);
      std::vector<std::size_t> other_idx;
      for (int b = 0; b < cfg_.batch; ++b)
        other_idx.push_back(static_cast<std::size_t>(rng_.below(other.size())));

      const Tensor bd = stack_frames(driving, drive_idx);
      const Tensor bo = stack_frames(other, other_idx);
      const LossBreakdown breakdown =
          x_drives ? train_iteration(bd, bo) : train_iteration(bo, bd);
      log << breakdown.csv_row() << '\n';
      epoch_pos_ += cfg_.batch;
      if (cfg_.checkpoint_interval > 0 && iteration_ % cfg_.checkpoint_interval == 0)
        save_periodic();
    }
    if (cfg_.max_iterations > 0 && iteration_ >= cfg_.max_iterations) break;
    epoch_pos_ = 0;
    (void)per_epoch;
  }

  log.flush();
  const auto final_path = cfg_.out_dir / "ckpt_final.psfw";
  save_checkpoint(final_path);
  last_checkpoint_ = final_path;
  return TrainResult{final_path, log_path, iteration_};
}

void Trainer::save_checkpoint(const std::filesystem::path& path) const {
  Checkpoint ck;
  save_networks_to(ck, "gx", gx_);
  save_networks_to(ck, "gy", gy_);
  save_networks_to(ck, "dx", dx_);
  save_networks_to(ck, "dy", dy_);
  auto save_opt = [&](const std::string& prefix, const AdamState& st, const Network& net) {
    auto params = net.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
      ck.put("opt." + prefix + "." + params[i].first + ".m", st.m[i]);
      ck.put("opt." + prefix + "." + params[i].first + ".v", st.v[i]);
    }
    ck.put_u64("opt." + prefix + ".step", {static_cast<std::uint64_t>(st.step)});
  };
  save_opt("gx", opt_gx_, gx_);
  save_opt("gy", opt_gy_, gy_);
  save_opt("dx", opt_dx_, dx_);
  save_opt("dy", opt_dy_, dy_);
  const auto& rs = rng_.state();
  ck.put_u64("meta.rng", {rs[0], rs[1], rs[2], rs[3]});
  ck.put_u64("meta.progress",
             {static_cast<std::uint64_t>(iteration_), static_cast<std::uint64_t>(epoch_),
              static_cast<std::uint64_t>(epoch_pos_)});
  ck.put_u64("meta.seed", {cfg_.seed});
  ck.put_u64("meta.config_hash", {cfg_.generator.hash(), cfg_.discriminator.hash()});
  ck.put_bytes("meta.config_json", cfg_.to_json());
  ck.save(path);
}

void Trainer::load_checkpoint(const std::filesystem::path& path) {
  const Checkpoint ck = Checkpoint::load(path);
  const auto hashes = ck.get_u64("meta.config_hash");
  if (hashes.size() != 2 || hashes[0] != cfg_.generator.hash() ||
      hashes[1] != cfg_.discriminator.hash())
    throw ConfigError("checkpoint was produced with a different network configuration: " +
                      path.string());
  const auto seed = ck.get_u64("meta.seed");
  if (seed.size() != 1 || seed[0] != cfg_.seed)
    throw ConfigError("checkpoint seed does not match the configured seed: " + path.string());

  load_networks_from(ck, "gx", gx_);
  load_networks_from(ck, "gy", gy_);
  load_networks_from(ck, "dx", dx_);
  load_networks_from(ck, "dy", dy_);
  auto load_opt = [&](const std::string& prefix, AdamState& st, Network& net) {
    auto params = net.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
      st.m[i] = ck.get_f32("opt." + prefix + "." + params[i].first + ".m");
      st.v[i] = ck.get_f32("opt." + prefix + "." + params[i].first + ".v");
      require_same_shape(st.m[i], *params[i].second, "optimizer state");
    }
    st.step = static_cast<std::int64_t>(ck.get_u64("opt." + prefix + ".step").at(0));
  };
  load_opt("gx", opt_gx_, gx_);
  load_opt("gy", opt_gy_, gy_);
  load_opt("dx", opt_dx_, dx_);
  load_opt("dy", opt_dy_, dy_);
  const auto rs = ck.get_u64("meta.rng");
  if (rs.size() != 4) throw FormatError("checkpoint rng state malformed: " + path.string());
  rng_.set_state({rs[0], rs[1], rs[2], rs[3]});
  const auto prog = ck.get_u64("meta.progress");
  if (prog.size() != 3) throw FormatError("checkpoint progress malformed: " + path.string());
  iteration_ = static_cast<std::int64_t>(prog[0]);
  epoch_ = static_cast<std::int64_t>(prog[1]);
  epoch_pos_ = static_cast<std::int64_t>(prog[2]);
  last_checkpoint_ = path;
}

VideoSequence translate_sequence(const Network& net, const VideoSequence& frames) {
  frames.check();
  VideoSequence out;
  out.width = frames.width;
  out.height = frames.height;
  out.domain = frames.domain + ":translated";
  out.clip_id = frames.clip_id;
  out.frames.reserve(frames.size());
  for (const auto& f : frames.frames) out.frames.push_back(net.forward(f, nullptr));
  return out;
}

void save_networks_to(Checkpoint& ck, const std::string& prefix, const Network& net) {
  for (const auto& [name, p] : net.parameters()) ck.put(prefix + "." + name, *p);
  ck.put_u64(prefix + ".config_hash", {net.config_hash});
}

void load_networks_from(const Checkpoint& ck, const std::string& prefix, Network& net) {
  for (auto& [name, p] : net.parameters()) {
    Tensor loaded = ck.get_f32(prefix + "." + name);
    require_same_shape(loaded, *p, "checkpoint parameter");
    *p = loaded.detached();
  }
}

Network load_generator(const std::filesystem::path& checkpoint, const std::string& which) {
  if (which != "gx" && which != "gy")
    throw ConfigError("load_generator: expected 'gx' or 'gy', got '" + which + "'");
  const Checkpoint ck = Checkpoint::load(checkpoint);
  const json cfg_json = json::parse(ck.get_bytes("meta.config_json"));
  GeneratorConfig gc;
  const auto& g = cfg_json.at("generator");
  gc.in_channels = g.at("in_channels").get<int>();
  gc.out_channels = g.at("out_channels").get<int>();
  gc.base_width = g.at("base_width").get<int>();
  gc.n_downsample = g.at("n_downsample").get<int>();
  gc.n_resblocks = g.at("n_resblocks").get<int>();
  Network net = build_generator<float>(gc, 0);
  load_networks_from(ck, which, net);
  return net;
}

}  // namespace pseudoflow

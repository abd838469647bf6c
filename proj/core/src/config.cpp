#include "pseudoflow/config.hpp"

namespace pseudoflow {

AdvForm adv_form_from_string(const std::string& s) {
  if (s == "minimax") return AdvForm::minimax;
  if (s == "nonsaturating") return AdvForm::nonsaturating;
  if (s == "least_squares") return AdvForm::least_squares;
  throw ConfigError("unknown adversarial form '" + s +
                    "' (expected minimax|nonsaturating|least_squares)");
}

FlowMode flow_mode_from_string(const std::string& s) {
  if (s == "full") return FlowMode::full;
  if (s == "translation_only") return FlowMode::translation_only;
  if (s == "scaling_only") return FlowMode::scaling_only;
  if (s == "wrong_pair") return FlowMode::wrong_pair;
  throw ConfigError("unknown flow mode '" + s +
                    "' (expected full|translation_only|scaling_only|wrong_pair)");
}

NoiseSharing noise_sharing_from_string(const std::string& s) {
  if (s == "independent") return NoiseSharing::independent;
  if (s == "shared") return NoiseSharing::shared;
  if (s == "off") return NoiseSharing::off;
  throw ConfigError("unknown noise sharing '" + s + "' (expected independent|shared|off)");
}

namespace {

void apply_key(TrainConfig& cfg, const std::string& section, const std::string& key,
               const TomlValue& value) {
  const std::string where = section + "." + key;
  auto as_int = [&] { return static_cast<int>(value.as_int(where)); };
  auto as_double = [&] { return value.as_double(where); };
  auto as_bool = [&] { return value.as_bool(where); };
  auto as_string = [&] { return value.as_string(where); };

  if (section == "run") {
    if (key == "seed") cfg.seed = static_cast<std::uint64_t>(value.as_int(where));
    else if (key == "epochs") cfg.epochs = as_int();
    else if (key == "batch") cfg.batch = as_int();
    else if (key == "max_iterations") cfg.max_iterations = value.as_int(where);
    else if (key == "resolution") cfg.resolution = as_int();
    else if (key == "checkpoint_interval") cfg.checkpoint_interval = as_int();
    else if (key == "data_root") cfg.data_root = as_string();
    else if (key == "out_dir") cfg.out_dir = as_string();
    else if (key == "resume") cfg.resume = as_string();
    else throw ConfigError("unknown config key '" + where + "'");
  } else if (section == "optim") {
    if (key == "lr") cfg.lr = as_double();
    else if (key == "beta1") cfg.beta1 = as_double();
    else if (key == "beta2") cfg.beta2 = as_double();
    else if (key == "adam_eps") cfg.adam_eps = as_double();
    else throw ConfigError("unknown config key '" + where + "'");
  } else if (section == "adversarial") {
    if (key == "form") cfg.adversarial = adv_form_from_string(as_string());
    else throw ConfigError("unknown config key '" + where + "'");
  } else if (section == "weights") {
    if (key == "lambda_ur") cfg.weights.lambda_ur = as_double();
    else if (key == "lambda_us") cfg.weights.lambda_us = as_double();
    else if (key == "lambda_cyc") cfg.weights.lambda_cyc = as_double();
    else if (key == "lambda_cont") cfg.weights.lambda_cont = as_double();
    else throw ConfigError("unknown config key '" + where + "'");
  } else if (section == "flow") {
    if (key == "mode") cfg.flow.mode = flow_mode_from_string(as_string());
    else if (key == "sigma_m") cfg.flow.sigma_m = as_double();
    else if (key == "sigma_s") cfg.flow.sigma_s = as_double();
    else if (key == "block") cfg.flow.block = as_int();
    else if (key == "filter") cfg.flow.filter = as_int();
    else if (key == "scale_sigma") cfg.flow.scale_sigma = as_double();
    else if (key == "reference_resolution") cfg.flow.reference_resolution = as_int();
    else if (key == "auto_scale") cfg.flow.auto_scale = as_bool();
    else throw ConfigError("unknown config key '" + where + "'");
  } else if (section == "noise") {
    if (key == "enabled") cfg.noise.enabled = as_bool();
    else if (key == "sigma_low") cfg.noise.sigma_low = as_double();
    else if (key == "sigma_high") cfg.noise.sigma_high = as_double();
    else if (key == "sharing") cfg.noise.sharing = noise_sharing_from_string(as_string());
    else throw ConfigError("unknown config key '" + where + "'");
  } else if (section == "suppression") {
    if (key == "x_domain") cfg.suppression.suppress_x_domain = as_bool();
    else if (key == "y_domain") cfg.suppression.suppress_y_domain = as_bool();
    else throw ConfigError("unknown config key '" + where + "'");
  } else if (section == "generator") {
    if (key == "in_channels") cfg.generator.in_channels = as_int();
    else if (key == "out_channels") cfg.generator.out_channels = as_int();
    else if (key == "base_width") cfg.generator.base_width = as_int();
    else if (key == "n_downsample") cfg.generator.n_downsample = as_int();
    else if (key == "n_resblocks") cfg.generator.n_resblocks = as_int();
    else throw ConfigError("unknown config key '" + where + "'");
  } else if (section == "discriminator") {
    if (key == "in_channels") cfg.discriminator.in_channels = as_int();
    else if (key == "base_width") cfg.discriminator.base_width = as_int();
    else if (key == "n_stride2") cfg.discriminator.n_stride2 = as_int();
    else if (key == "extra_stride1_stage") cfg.discriminator.extra_stride1_stage = as_bool();
    else throw ConfigError("unknown config key '" + where + "'");
  } else {
    throw ConfigError("unknown config section '" + section + "'");
  }
}

}  // namespace

TrainConfig train_config_from_toml(const TomlTable& table) {
  TrainConfig cfg;
  for (const auto& [section, kv] : table)
    for (const auto& [key, value] : kv) apply_key(cfg, section, key, value);
  return cfg;
}

void apply_override(TrainConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must look like section.key=value: " + assignment);
  const std::string dotted = assignment.substr(0, eq);
  const auto dot = dotted.find('.');
  if (dot == std::string::npos)
    throw ConfigError("override must look like section.key=value: " + assignment);
  const std::string head = "[" + dotted.substr(0, dot) + "]\n" + dotted.substr(dot + 1) + " = ";
  const std::string rhs = assignment.substr(eq + 1);
  TomlTable t;
  try {
    t = parse_toml(head + rhs);
  } catch (const ConfigError&) {
    // bare words on the command line read as strings
    t = parse_toml(head + '"' + rhs + '"');
  }
  for (const auto& [section, kv] : t)
    for (const auto& [key, value] : kv) apply_key(cfg, section, key, value);
}

TrainConfig load_train_config(const std::filesystem::path& path,
                              const std::vector<std::string>& overrides) {
  TrainConfig cfg = train_config_from_toml(parse_toml_file(path));
  for (const auto& o : overrides) apply_override(cfg, o);
  cfg.validate();
  return cfg;
}

}  // namespace pseudoflow

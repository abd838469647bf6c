#include "pseudoflow/presets.hpp"

namespace pseudoflow {

TrainConfig desk_full_preset() {
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch = 1;
  cfg.weights.lambda_ur = 10.0;
  cfg.weights.lambda_us = 10.0;
  cfg.weights.lambda_cyc = 10.0;
  cfg.weights.lambda_cont = 0.0;
  cfg.suppression.suppress_x_domain = true;  // X is the video domain
  cfg.noise.enabled = true;
  cfg.adversarial = AdvForm::nonsaturating;
  cfg.generator = GeneratorConfig::desk();
  cfg.discriminator = DiscriminatorConfig::desk();
  cfg.checkpoint_interval = 0;
  return cfg;
}

void apply_ablation_preset(TrainConfig& cfg, const std::string& name) {
  if (name == "full") return;
  if (name == "no-noise") {
    cfg.noise.enabled = false;
    return;
  }
  if (name == "wrong-flow") {
    cfg.flow.mode = FlowMode::wrong_pair;
    return;
  }
  if (name == "translation-only") {
    cfg.flow.mode = FlowMode::translation_only;
    return;
  }
  if (name == "scaling-only") {
    cfg.flow.mode = FlowMode::scaling_only;
    return;
  }
  if (name == "no-ur") {
    cfg.weights.lambda_ur = 0.0;
    return;
  }
  if (name == "no-us") {
    cfg.weights.lambda_us = 0.0;
    return;
  }
  if (name == "no-cyc") {
    cfg.weights.lambda_cyc = 0.0;
    return;
  }
  if (name == "adv-cyc-only") {
    cfg.weights.lambda_ur = 0.0;
    cfg.weights.lambda_us = 0.0;
    cfg.suppression.suppress_x_domain = false;
    cfg.suppression.suppress_y_domain = false;
    return;
  }
  throw ConfigError("unknown ablation preset '" + name + "'");
}

const std::vector<std::string>& ablation_preset_names() {
  static const std::vector<std::string> names = {
      "full",     "no-noise", "wrong-flow", "translation-only",
      "scaling-only", "no-ur",    "no-us",      "no-cyc",
      "adv-cyc-only"};
  return names;
}

}  // namespace pseudoflow

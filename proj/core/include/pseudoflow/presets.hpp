#pragma once

#include <string>
#include <vector>

#include "pseudoflow/trainer.hpp"

namespace pseudoflow {

// Desk-scale video-to-labels setup: non-saturating adversarial training,
// recycle/spatial weights 10, cycle 10, video-domain (X) regularization
// suppression, noise on. One epoch over the driving domain.
TrainConfig desk_full_preset();

// Named single-change experiment variants on top of a base config.
void apply_ablation_preset(TrainConfig& cfg, const std::string& name);

const std::vector<std::string>& ablation_preset_names();

}  // namespace pseudoflow

#pragma once

#include <string>
#include <vector>

#include "pseudoflow/toml.hpp"
#include "pseudoflow/trainer.hpp"

namespace pseudoflow {

AdvForm adv_form_from_string(const std::string& s);
FlowMode flow_mode_from_string(const std::string& s);
NoiseSharing noise_sharing_from_string(const std::string& s);

// Maps a parsed config onto TrainConfig. Unknown sections or keys are
// errors, never silently ignored.
TrainConfig train_config_from_toml(const TomlTable& table);

// "section.key=value" override, same validation as the file path.
void apply_override(TrainConfig& cfg, const std::string& assignment);

TrainConfig load_train_config(const std::filesystem::path& path,
                              const std::vector<std::string>& overrides = {});

}  // namespace pseudoflow

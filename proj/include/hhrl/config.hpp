#pragma once

#include <optional>
#include <string>

#include "hhrl/trainer.hpp"

namespace hhrl {

struct AppConfig {
  TrainConfig train;
  int eval_episodes = 100;
};

// Flat key=value file with dotted section prefixes ('#' starts a comment).
// Every key has a default; unknown keys are errors. Values are validated
// after loading.
AppConfig load_app_config(const std::optional<std::string>& path);

// The full key table with current values, suitable as a starting config.
std::string dump_config(const AppConfig& cfg);

}  // namespace hhrl

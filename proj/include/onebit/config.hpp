#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "onebit/experiment.hpp"

namespace onebit {

/// Flat JSON view of an ExperimentConfig; key names double as CLI flag names.
nlohmann::json to_json(const ExperimentConfig& config);

/// Reads a flat JSON object over the defaults. Unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);

ExperimentConfig load_config(const std::string& path);

/// All recognized keys, in to_json order.
std::vector<std::string> config_keys();

}  // namespace onebit

#pragma once

#include <string>

#include "json.hpp"
#include "rbfmix/engine.hpp"

namespace rbfmix::detail {

/// Applies the settings in `j` to `cfg`; `path` prefixes field diagnostics.
void apply_config_json(const nlohmann::json& j, OptimizerConfig& cfg, const std::string& path);

}  // namespace rbfmix::detail

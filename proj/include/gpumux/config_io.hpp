#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "gpumux/sim.hpp"

namespace gpumux {

// Parses the run config document with sections `device`, `policy`,
// `scheduler`, `tenants`, `sim`. `device` may be an inline profile object, a
// registered profile name ("v100"), or a path to a profile JSON file.
// Unknown keys anywhere are a ConfigError naming the key.
SimConfig config_from_json(const nlohmann::json& doc);

SimConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides = {});

// Applies one `section.key=value` override to a JSON document in place.
// Values parse as JSON when possible, otherwise as strings.
void apply_override(nlohmann::json& doc, const std::string& assignment);

nlohmann::json config_to_json(const SimConfig& config);

}  // namespace gpumux

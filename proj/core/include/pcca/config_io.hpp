// Copyright 2026 The PCCA Lane-Swap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// JSON configuration files. Sections: scenario, filter, baseline, vehicle,
// road, vgr, tunings, reporting. Every ScenarioConfig parameter has a key;
// keys not listed are rejected with their JSON-pointer location.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "pcca/scenario.hpp"

namespace pcca {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kConfigEnvVar = "PCCA_CONFIG";

/// Full effective configuration. An unlimited V2V range is written as null.
nlohmann::ordered_json ConfigToJson(const ScenarioConfig& config);

/// Applies the keys present in `doc` on top of `base` and validates the
/// result. Throws ConfigError.
ScenarioConfig ConfigFromJson(const nlohmann::json& doc, ScenarioConfig base = {});

ScenarioConfig LoadConfigFile(const std::string& path, ScenarioConfig base = {});

/// `section.key=value`. The value is parsed as JSON; anything that does not
/// parse is taken as a string. Throws ConfigError.
void ApplyOverride(ScenarioConfig& config, std::string_view assignment);

/// Value of PCCA_CONFIG, if set and non-empty.
std::optional<std::string> ConfigPathFromEnv();

}  // namespace pcca

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "abs_lab/scenario.hpp"

namespace abs_lab {

/// Malformed or unreadable scenario file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses a JSON scenario document. Keys that are absent keep their defaults;
/// unknown keys are rejected so typos do not pass silently.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// JSON echo of a configuration, accepted back by parse_config.
std::string config_to_json(const ScenarioConfig& config);

}  // namespace abs_lab

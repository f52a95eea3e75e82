#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "qadapt/harness.hpp"

namespace qadapt {

/// Names accepted by builtin_scenario().
std::vector<std::string> builtin_scenario_names();

/// case1-stochastic, case1-deterministic, case2-no-maneuver,
/// case2-perfect-maneuver, case2-imperfect-maneuver. Throws ConfigError.
ScenarioConfig builtin_scenario(const std::string& name);

/// Parses a JSON scenario document. Keys not present keep the defaults of the
/// selected kind; unknown keys and out-of-range values raise ConfigError.
ScenarioConfig scenario_from_json(const std::string& text);
ScenarioConfig load_scenario(const std::filesystem::path& file);

/// Full resolved configuration as JSON (round-trips through scenario_from_json).
std::string scenario_to_json(const ScenarioConfig& config, int indent = 2);

/// A built-in name or a path to a JSON file.
ScenarioConfig resolve_scenario(const std::string& name_or_path);

}  // namespace qadapt

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "spaceverse/orchestrator.hpp"

namespace spaceverse {

// Configuration problems, each message carrying the offending field path.
struct ConfigError : std::runtime_error {
  explicit ConfigError(std::vector<std::string> messages_in)
      : std::runtime_error(join(messages_in)), messages(std::move(messages_in)) {}
  std::vector<std::string> messages;

 private:
  static std::string join(const std::vector<std::string>& msgs) {
    std::string all = "invalid configuration:";
    for (const auto& m : msgs) all += "\n  " + m;
    return all;
  }
};

// Strict parse: unknown keys are errors, all defaults materialized, derived
// seeds filled in from the master seed.
ScenarioConfig config_from_json(const nlohmann::json& j);
ScenarioConfig load_config(const std::string& path);

// Fully resolved echo; feeding it back through config_from_json yields the
// same configuration.
nlohmann::ordered_json config_to_json(const ScenarioConfig& cfg);

ScenarioConfig default_config();

}  // namespace spaceverse

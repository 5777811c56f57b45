#pragma once

#include <string>

#include <json.hpp>

#include "glp/errors.hpp"
#include "glp/experiment.hpp"

namespace glp::cli {

// Malformed, missing or unknown configuration entries.
class ConfigError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Strict parse: unknown keys and missing required fields throw ConfigError
/// naming the JSON path of the offending entry.
ExperimentConfig parse_config(const nlohmann::json& doc, std::string* output_dir = nullptr);
ExperimentConfig load_config(const std::string& path, std::string* output_dir = nullptr);

/// Complete config with every default made explicit; parsing it back gives an equivalent run.
nlohmann::json to_json(const ExperimentConfig& config, const std::string& output_dir);

std::string model_name(ModelKind kind);
nlohmann::json named(const ParameterSpace& space, const ParameterVector& values);

}  // namespace glp::cli

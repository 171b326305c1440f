#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "subgradfed/harness.hpp"
#include "subgradfed/optimizers.hpp"
#include "subgradfed/problem.hpp"

namespace subgradfed {

/// Parsed command-line configuration file. Every section is optional;
/// unknown keys anywhere are rejected with ConfigError.
struct CliConfig {
  std::optional<GenConfig> problem;
  std::optional<RunConfig> run;
  std::vector<double> factor_grid = default_factor_grid();
  std::optional<ExperimentMatrix> matrix;
};

CliConfig parse_cli_config(const nlohmann::json& doc);
/// IoError when the file cannot be read, ConfigError on bad JSON or schema.
CliConfig load_cli_config(const std::filesystem::path& path);

/// "polyak" resolves to the Polyak rule of the given method.
ScheduleKind resolve_schedule(const std::string& name, Method method);

/// Human-readable list of every key and its default, for --help.
std::string config_reference();

}  // namespace subgradfed

#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "adaloc/experiment_config.hpp"

namespace adaloc {

// Reads a flat `key = value` file ('#' starts a comment; keys carry dotted
// section prefixes such as model.k).  Unknown and duplicate keys are
// rejected.  A file whose first character is '{' is parsed as JSON instead:
// either a plain object of the same keys or a meta.json with a "config"
// member, so an emitted meta.json reproduces its run when loaded back.
ExperimentConfig load_config(const std::filesystem::path& path);

// Applies one key/value pair onto cfg; throws ConfigError on unknown keys
// or unparseable values.
void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                        const std::string& value);

// The full key set with current values, used for the meta.json echo.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

// Enum spellings shared by the config format and the CSV/JSON outputs.
std::string to_string(FilterVariant v);
std::string to_string(Taper t);
std::string to_string(PoolMode m);

}  // namespace adaloc

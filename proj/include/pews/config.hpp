#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pews/federation.hpp"

namespace pews {

// Parsed `key = value` experiment file: the shared ExperimentConfig plus the
// battery-level settings (seed list, output directory).
struct ConfigFile {
  ExperimentConfig base;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string output_dir = "out";
};

// Throws ConfigError (naming the offending key) on unknown keys or bad
// values; throws IoError when the file cannot be read.
ConfigFile parse_config_file(const std::string& path);
ConfigFile parse_config_text(const std::string& text);

}  // namespace pews

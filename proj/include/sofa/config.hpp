#pragma once

#include <string>

#include "sofa/orchestrator.hpp"

namespace sofa {

// Desk-scale data preparation knobs used by the CLI alongside RunConfig.
struct DataConfig {
  int subset_size = 4000;  // stratified subset; 0 = full dataset
  friend bool operator==(const DataConfig&, const DataConfig&) = default;
};

struct FileConfig {
  RunConfig run;
  DataConfig data;
  friend bool operator==(const FileConfig&, const FileConfig&) = default;
};

// Flat key = value text, '#' comments, schema_version 1. Every key has a
// default, so an empty document is valid. Unknown keys and malformed values
// raise ConfigError naming the key.
FileConfig parse_config(const std::string& text);
FileConfig load_config(const std::string& path);
std::string serialize_config(const FileConfig& config);

}  // namespace sofa

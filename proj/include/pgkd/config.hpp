#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "pgkd/analysis.hpp"
#include "pgkd/dataset.hpp"

namespace pgkd {

// Fully-resolved experiment description. Parsing is strict: unknown keys are
// rejected with their path, defaults are materialized into the echo, and the
// echo's hash stamps every output.
struct ExperimentConfig {
  std::string dataset_manifest;   // exactly one of manifest / sbm
  std::optional<SbmConfig> sbm;
  std::string split_file;         // optional pre-built split
  SplitOptions split;
  PipelineConfig pipeline;
  std::string out_dir = "out";
  int jobs = 1;

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig from_file(const std::string& path);
  nlohmann::json echo() const;  // every field, resolved
  std::string hash() const;
};

nlohmann::json sbm_config_to_json(const SbmConfig& cfg);
SbmConfig sbm_config_from_json(const nlohmann::json& j, const std::string& path_prefix);

nlohmann::json split_to_json(const SplitSpec& s);
SplitSpec split_spec_from_json(const nlohmann::json& j, int n);

}  // namespace pgkd

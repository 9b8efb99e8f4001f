#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "plantxvit/data.hpp"
#include "plantxvit/metrics.hpp"
#include "plantxvit/model.hpp"
#include "plantxvit/training.hpp"

namespace plantxvit {

// Parsed `key = value` text with [section] headers. Blank lines and lines
// starting with '#' or ';' are ignored.
struct ConfigEntry {
  std::string value;
  std::size_t line = 0;
};
using ConfigSections = std::map<std::string, std::map<std::string, ConfigEntry>>;

ConfigSections parse_config_text(const std::string& text);  // throws ConfigError

// Everything a command needs, after the config file and flags are merged.
struct RunConfig {
  PlantXViTConfig model;
  TrainConfig train;
  Averaging averaging = Averaging::kMacro;

  // Sweep axes; a single entry means a single run.
  std::vector<std::size_t> patch_sizes{5};
  std::vector<OptimizerKind> optimizers{OptimizerKind::kAdam};

  // A directory tree of class folders, or "synth" / "synth:<per_class>".
  std::string data;
  std::filesystem::path out = "run";
  std::filesystem::path checkpoint;
  std::filesystem::path init_checkpoint;  // parameters loaded by prefix before training
  std::string init_prefix = "block";
  bool skip_corrupt = false;

  // Keys given explicitly, as "section.key"; used to infer num_classes.
  std::set<std::string> explicit_keys;

  void apply(const ConfigSections& sections);  // unknown keys throw ConfigError
  void validate() const;
  std::string to_text() const;  // round-trips through parse_config_text + apply
};

RunConfig load_run_config(const std::filesystem::path& path);

std::vector<std::size_t> parse_size_list(const std::string& text);
std::vector<OptimizerKind> parse_optimizer_list(const std::string& text);

// Reads `spec.data`; synthetic data uses the model's class count and input size.
DatasetManifest load_run_data(const RunConfig& config);

}  // namespace plantxvit

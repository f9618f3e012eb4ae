#pragma once

#include "shells/mcmc.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace shells {

/// Every tunable of a run. Defaults match the library defaults.
struct RunConfig {
  MeshOptions mesh;
  MatchOptions match;
  std::filesystem::path source_descriptors;
  std::filesystem::path target_descriptors;
  int threads = 0;  // 0 leaves the OpenMP default
  bool one_based = false;
  Index eval_thresholds = 100;
  double distortion_cap = 10.0;
};

/// Name of the environment variable that supplies the default basis cache
/// directory.
inline constexpr const char* kCacheDirEnv = "SMOOTH_SHELLS_CACHE_DIR";

/// Defaults, with the cache directory taken from the environment if set.
RunConfig default_config();

/// Applies one "section.key = value" assignment. Throws ConfigError for
/// unknown keys, malformed values and values out of range.
void set_option(RunConfig& config, const std::string& key, const std::string& value);

/// Reads an INI document (sections per module, key = value) on top of
/// `config`.
void load_config(RunConfig& config, const std::filesystem::path& path);
void parse_config(RunConfig& config, const std::string& text);

/// Checks cross-field constraints such as k_init < k_max.
void validate(const RunConfig& config);

/// All keys in schema order with their current values, as INI text.
std::string config_snapshot(const RunConfig& config);
void write_config_snapshot(const std::filesystem::path& path, const RunConfig& config);

/// Every "section.key" the schema accepts.
std::vector<std::string> config_keys();

}  // namespace shells

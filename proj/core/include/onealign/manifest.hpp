#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace onealign {

inline constexpr const char* kToolVersion = "0.1.0";

struct InputDigest {
  std::string path;
  std::string fnv1a64;
};

/// Provenance embedded in every report.
struct RunManifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<InputDigest> inputs;
  std::string tool_version = kToolVersion;
  /// Only recorded on request; keeps reports byte-identical across runs.
  std::optional<double> wall_time_s;

  void add_input(const std::filesystem::path& path);
};

std::string digest_file(const std::filesystem::path& path);
/// FNV-1a of the compact JSON dump (keys sorted by nlohmann::json).
std::string hash_config(const nlohmann::json& config);

void to_json(nlohmann::json& j, const RunManifest& m);

}  // namespace onealign

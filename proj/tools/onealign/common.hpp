#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "onealign/manifest.hpp"

namespace onealign::cli {

/// Flags shared by every subcommand.
struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out = ".";
  unsigned threads = 0;
  bool allow_missing = false;
  bool record_time = false;
};

nlohmann::json read_json(const std::filesystem::path& path);
/// Config file contents, or an empty object without --config.
nlohmann::json config_json(const Globals& g);

/// Writes `report` with its manifest under "manifest" as pretty JSON.
void write_report(const std::filesystem::path& path, nlohmann::json report, const RunManifest& manifest);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Starts a manifest for `command` and remembers when the run began.
class RunClock {
 public:
  RunClock() : start_(std::chrono::steady_clock::now()) {}
  RunManifest manifest(const Globals& g, std::string command, const nlohmann::json& config,
                       std::uint64_t seed) const;

 private:
  std::chrono::steady_clock::time_point start_;
};

unsigned threads(const Globals& g);
std::filesystem::path out_dir(const Globals& g);

void register_data(CLI::App& app, Globals& g);
void register_align(CLI::App& app, Globals& g);
void register_probe(CLI::App& app, Globals& g);
void register_stats(CLI::App& app, Globals& g);
void register_selfcheck(CLI::App& app, Globals& g);

}  // namespace onealign::cli

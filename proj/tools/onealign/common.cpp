#include "common.hpp"

#include "onealign/binio.hpp"
#include "onealign/error.hpp"
#include "onealign/parallel.hpp"

namespace onealign::cli {

nlohmann::json read_json(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(binio::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

nlohmann::json config_json(const Globals& g) {
  return g.config.empty() ? nlohmann::json::object() : read_json(g.config);
}

void write_report(const std::filesystem::path& path, nlohmann::json report, const RunManifest& manifest) {
  report["manifest"] = manifest;
  binio::write_file(path, report.dump(2) + "\n");
}

void write_text(const std::filesystem::path& path, const std::string& text) { binio::write_file(path, text); }

RunManifest RunClock::manifest(const Globals& g, std::string command, const nlohmann::json& config,
                               std::uint64_t seed) const {
  RunManifest m;
  m.command = std::move(command);
  m.config_hash = hash_config(config);
  m.seed = seed;
  const char* env = std::getenv("ONEALIGN_RECORD_TIME");
  if (g.record_time || (env && std::string(env) == "1")) {
    m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  return m;
}

unsigned threads(const Globals& g) { return resolve_threads(g.threads); }

std::filesystem::path out_dir(const Globals& g) {
  std::filesystem::path p(g.out);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + p.string() + ": " + ec.message());
  return p;
}

}  // namespace onealign::cli

#include "onealign/manifest.hpp"

#include "onealign/binio.hpp"

namespace onealign {

std::string digest_file(const std::filesystem::path& path) {
  return binio::hex64(binio::fnv1a64(binio::read_file(path)));
}

std::string hash_config(const nlohmann::json& config) { return binio::hex64(binio::fnv1a64(config.dump())); }

void RunManifest::add_input(const std::filesystem::path& path) {
  inputs.push_back({path.generic_string(), digest_file(path)});
}

void to_json(nlohmann::json& j, const RunManifest& m) {
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& in : m.inputs) inputs.push_back({{"path", in.path}, {"fnv1a64", in.fnv1a64}});
  j = {{"command", m.command},
       {"config_hash", m.config_hash},
       {"seed", m.seed},
       {"inputs", inputs},
       {"tool_version", m.tool_version}};
  if (m.wall_time_s) j["wall_time_s"] = *m.wall_time_s;
}

}  // namespace onealign

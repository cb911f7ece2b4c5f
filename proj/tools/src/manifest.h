#ifndef TEAL_TOOLS_MANIFEST_H_
#define TEAL_TOOLS_MANIFEST_H_

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace teal::cli {

// Written next to every output file. created_at is the only field that
// differs between two runs with the same arguments.
struct RunManifest {
  std::string tool_version;
  std::string subcommand;
  std::uint64_t seed = 0;
  nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string created_at;
};

nlohmann::ordered_json manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::ordered_json& j);

void save_manifest(const std::string& path, const RunManifest& m);
RunManifest load_manifest(const std::string& path);

// Manifest path for a file output.
std::string manifest_path_for(const std::string& output);

}  // namespace teal::cli

#endif  // TEAL_TOOLS_MANIFEST_H_

#include "manifest.h"

#include <chrono>
#include <ctime>
#include <fstream>

#include "teal/error.h"

namespace teal::cli {

namespace {

std::string utc_now() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

nlohmann::ordered_json manifest_to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["tool"] = "teal";
  j["tool_version"] = m.tool_version;
  j["subcommand"] = m.subcommand;
  j["seed"] = m.seed;
  j["parameters"] = m.parameters;
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  j["created_at"] = m.created_at.empty() ? utc_now() : m.created_at;
  return j;
}

RunManifest manifest_from_json(const nlohmann::ordered_json& j) {
  try {
    RunManifest m;
    m.tool_version = j.at("tool_version").get<std::string>();
    m.subcommand = j.at("subcommand").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.parameters = j.at("parameters");
    m.inputs = j.at("inputs").get<std::vector<std::string>>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    m.created_at = j.value("created_at", "");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed manifest: ") + e.what());
  }
}

void save_manifest(const std::string& path, const RunManifest& m) {
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot open for writing");
  out << manifest_to_json(m).dump(2) << '\n';
  if (!out) throw IoError(path, "write failed");
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open for reading");
  nlohmann::ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return manifest_from_json(j);
}

std::string manifest_path_for(const std::string& output) {
  return output + ".manifest.json";
}

}  // namespace teal::cli

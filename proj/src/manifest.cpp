#include "perfseer/manifest.hpp"

#include <cstdlib>
#include <ctime>

#include "perfseer/kernel_json.hpp"

namespace perfseer {

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  nlohmann::json hashes = nlohmann::json::object();
  for (const auto& [k, v] : input_hashes) hashes[k] = v;
  j["input_hashes"] = std::move(hashes);
  j["seed"] = seed;
  j["tool_version"] = tool_version;
  j["timestamp"] = timestamp;
  return j;
}

std::string RunManifest::comment_line() const { return "# manifest: " + to_json().dump(); }

RunManifest make_manifest(const std::string& command,
                          const std::map<std::string, std::string>& input_hashes,
                          long long seed) {
  RunManifest m;
  m.command = command;
  m.input_hashes = input_hashes;
  m.seed = seed;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    m.timestamp = epoch;
  } else {
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    m.timestamp = buf;
  }
  return m;
}

std::string file_hash_hex(const std::string& content) {
  uint64_t h = fnv1a(content);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace perfseer

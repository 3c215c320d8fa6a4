#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace perfseer {

inline constexpr const char* kToolVersion = "0.1.0";

/// Provenance embedded in every output file: command, input hashes, seed and
/// tool version. The timestamp honors SOURCE_DATE_EPOCH so that reruns with
/// equal inputs are byte-identical.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> input_hashes;  // label -> fnv64 hex
  long long seed = 0;
  std::string tool_version = kToolVersion;
  std::string timestamp;

  nlohmann::json to_json() const;
  /// One-line form for embedding as a '#' comment in CSV outputs.
  std::string comment_line() const;
};

RunManifest make_manifest(const std::string& command,
                          const std::map<std::string, std::string>& input_hashes,
                          long long seed);

std::string file_hash_hex(const std::string& content);

}  // namespace perfseer

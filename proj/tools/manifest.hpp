#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace sketchmix::cli {

/// Everything needed to re-run a command and get the same artifacts.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;  // without the program name
  nlohmann::json params = nlohmann::json::object();
  std::optional<std::uint64_t> seed;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  double duration_ms = 0.0;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

std::filesystem::path manifest_path_for(const std::filesystem::path& output);

void write_manifest(const std::filesystem::path& path, const RunManifest& m);
RunManifest read_manifest(const std::filesystem::path& path);

nlohmann::json version_info();

}  // namespace sketchmix::cli

#include "manifest.hpp"

#include <Eigen/Core>
#include <fstream>

#include "sketchmix/error.hpp"
#include "sketchmix/io.hpp"

#ifndef SKETCHMIX_VERSION
#define SKETCHMIX_VERSION "unknown"
#endif

namespace sketchmix::cli {

nlohmann::json version_info() {
  return {
      {"sketchmix", SKETCHMIX_VERSION},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION)},
      {"compiler", __VERSION__},
      {"formats", {"CLDATA01", "CLFREQ01", "CLSKCH01"}},
  };
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["argv"] = argv;
  j["params"] = params;
  j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["duration_ms"] = duration_ms;
  j["versions"] = version_info();
  return j;
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.argv = j.at("argv").get<std::vector<std::string>>();
    m.params = j.value("params", nlohmann::json::object());
    if (j.contains("seed") && !j["seed"].is_null()) m.seed = j["seed"].get<std::uint64_t>();
    m.inputs = j.value("inputs", std::vector<std::string>{});
    m.outputs = j.value("outputs", std::vector<std::string>{});
    m.duration_ms = j.value("duration_ms", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  return m;
}

std::filesystem::path manifest_path_for(const std::filesystem::path& output) {
  return output.string() + ".manifest.json";
}

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  io::write_file(path, m.to_json().dump(2) + "\n");
}

RunManifest read_manifest(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("manifest " + path.string() + ": " + e.what());
  }
  return RunManifest::from_json(j);
}

}  // namespace sketchmix::cli

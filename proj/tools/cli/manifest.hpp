#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace how2::cli {

// Sidecar describing one run: what ran, on which bytes, with which settings.
class RunManifest {
 public:
  RunManifest(std::string command, std::vector<std::string> argv);

  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  /// Digest of the effective settings (config file + env + flags).
  void set_config(const std::string& canonical_settings);

  /// Refuses to overwrite an input with an output.
  void check_outputs_distinct() const;

  /// Writes `<primary output>.manifest.json`; no-op without outputs.
  void write() const;

  nlohmann::ordered_json to_json() const;

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::vector<std::filesystem::path> inputs_;
  std::vector<std::filesystem::path> outputs_;
  std::string config_digest_;
  std::string started_at_;
};

std::filesystem::path manifest_path(const std::filesystem::path& output);

}  // namespace how2::cli

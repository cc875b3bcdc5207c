#include "cli/manifest.hpp"

#include <chrono>
#include <fstream>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "how2/util/digest.hpp"
#include "how2/util/error.hpp"
#include "how2/version.hpp"

namespace how2::cli {

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(now)));
}

}  // namespace

RunManifest::RunManifest(std::string command, std::vector<std::string> argv)
    : command_(std::move(command)), argv_(std::move(argv)), started_at_(utc_now()) {}

void RunManifest::add_input(const std::filesystem::path& path) { inputs_.push_back(path); }
void RunManifest::add_output(const std::filesystem::path& path) { outputs_.push_back(path); }
void RunManifest::set_config(const std::string& canonical_settings) {
  config_digest_ = util::sha256_hex(canonical_settings);
}

void RunManifest::check_outputs_distinct() const {
  for (const auto& out : outputs_) {
    for (const auto& in : inputs_) {
      std::error_code ec;
      if (std::filesystem::exists(out, ec) && std::filesystem::equivalent(out, in, ec)) {
        throw ValidationError("output " + out.string() + " would overwrite input " + in.string());
      }
      if (std::filesystem::absolute(out).lexically_normal() == std::filesystem::absolute(in).lexically_normal()) {
        throw ValidationError("output " + out.string() + " would overwrite input " + in.string());
      }
    }
  }
}

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
  for (const auto& in : inputs_) inputs[in.string()] = util::file_sha256_hex(in);
  nlohmann::ordered_json outputs = nlohmann::ordered_json::object();
  for (const auto& out : outputs_) {
    std::error_code ec;
    outputs[out.string()] = std::filesystem::exists(out, ec) ? util::file_sha256_hex(out) : "";
  }
  return {{"command", command_},
          {"argv", argv_},
          {"config_digest", config_digest_},
          {"inputs", std::move(inputs)},
          {"outputs", std::move(outputs)},
          {"versions", {{"how2", std::string(how2::version())}}},
          {"started_at", started_at_},
          {"finished_at", utc_now()}};
}

std::filesystem::path manifest_path(const std::filesystem::path& output) {
  auto p = output;
  p += ".manifest.json";
  return p;
}

void RunManifest::write() const {
  if (outputs_.empty()) return;
  const auto path = manifest_path(outputs_.front());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << to_json().dump(2) << "\n";
}

}  // namespace how2::cli

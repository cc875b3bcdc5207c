#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace how2::util {

// Flat key/value configuration read from a TOML subset: [tables], dotted
// keys, basic and literal strings, integers, floats, booleans and
// single-type arrays. Keys are addressed as "table.key".
//
// Lookups consult the environment first: "gateway.model_name" may be
// overridden by HOW2_GATEWAY_MODEL_NAME. Command-line flags are applied by
// callers on top of whatever these getters return.
class Config {
 public:
  using Scalar = std::variant<std::string, std::int64_t, double, bool>;
  using Value = std::variant<Scalar, std::vector<Scalar>>;

  Config() = default;

  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);

  bool contains(const std::string& key) const;

  std::optional<std::string> get_string(const std::string& key) const;
  std::optional<std::int64_t> get_int(const std::string& key) const;
  std::optional<double> get_number(const std::string& key) const;
  std::optional<bool> get_bool(const std::string& key) const;
  std::optional<std::vector<std::string>> get_string_list(const std::string& key) const;

  std::string get_string_or(const std::string& key, std::string fallback) const {
    return get_string(key).value_or(std::move(fallback));
  }
  std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const {
    return get_int(key).value_or(fallback);
  }
  double get_number_or(const std::string& key, double fallback) const {
    return get_number(key).value_or(fallback);
  }

  void set(const std::string& key, Value value) { values_[key] = std::move(value); }

  /// Stable textual form (sorted keys) used for run-manifest digests.
  std::string canonical() const;

  /// Environment variable name that overrides `key`.
  static std::string env_name(const std::string& key);

 private:
  std::map<std::string, Value> values_;
};

}  // namespace how2::util

#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace how2::util {

// Prompt templates stored as files `<dir>/<name>.md`. Placeholders are
// written `{{key}}`; rendering fails loudly on any placeholder without a
// value so a template edit can never silently drop content.
class PromptLibrary {
 public:
  explicit PromptLibrary(std::filesystem::path dir);

  /// Throws ConfigError when `<name>.md` is missing.
  const std::string& get(const std::string& name) const;
  std::string render(const std::string& name, const std::map<std::string, std::string>& values) const;

  const std::filesystem::path& dir() const noexcept { return dir_; }

  /// HOW2_PROMPTS_DIR, falling back to the source tree's prompts/.
  static std::filesystem::path default_dir();

 private:
  std::filesystem::path dir_;
  mutable std::map<std::string, std::string> loaded_;
};

std::string render_template(const std::string& text, const std::map<std::string, std::string>& values);

}  // namespace how2::util

#include "how2/util/prompt_library.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "how2/util/error.hpp"

#ifndef HOW2_DEFAULT_PROMPTS_DIR
#define HOW2_DEFAULT_PROMPTS_DIR "prompts"
#endif

namespace how2::util {

PromptLibrary::PromptLibrary(std::filesystem::path dir) : dir_(std::move(dir)) {
  // Load eagerly so the library is read-only (and thread-safe) afterwards.
  std::error_code ec;
  if (!std::filesystem::is_directory(dir_, ec)) return;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.path().extension() != ".md") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    loaded_.emplace(entry.path().stem().string(), ss.str());
  }
}

const std::string& PromptLibrary::get(const std::string& name) const {
  const auto it = loaded_.find(name);
  if (it == loaded_.end()) {
    throw ConfigError("prompt template '" + name + "' not found under " + dir_.string());
  }
  return it->second;
}

std::string PromptLibrary::render(const std::string& name, const std::map<std::string, std::string>& values) const {
  return render_template(get(name), values);
}

std::filesystem::path PromptLibrary::default_dir() {
  if (const char* env = std::getenv("HOW2_PROMPTS_DIR")) return env;
  return HOW2_DEFAULT_PROMPTS_DIR;
}

std::string render_template(const std::string& text, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto open = text.find("{{", pos);
    if (open == std::string::npos) {
      out.append(text, pos, std::string::npos);
      break;
    }
    const auto close = text.find("}}", open + 2);
    if (close == std::string::npos) throw ConfigError("unterminated placeholder in prompt template");
    out.append(text, pos, open - pos);
    const std::string key = text.substr(open + 2, close - open - 2);
    const auto it = values.find(key);
    if (it == values.end()) throw ConfigError("prompt placeholder '{{" + key + "}}' has no value");
    out += it->second;
    pos = close + 2;
  }
  return out;
}

}  // namespace how2::util

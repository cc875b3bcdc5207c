#include "how2/util/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "how2/util/error.hpp"
#include "how2/util/text.hpp"

namespace how2::util {
namespace {

class Scanner {
 public:
  Scanner(std::string_view text, int line) : text_(text), line_(line) {}

  void skip_ws() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  bool done() {
    skip_ws();
    return pos_ >= text_.size();
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("config line " + std::to_string(line_) + ": " + what);
  }

  Config::Value value() {
    skip_ws();
    if (peek() == '[') {
      ++pos_;
      std::vector<Config::Scalar> items;
      for (;;) {
        skip_ws();
        if (peek() == ']') {
          ++pos_;
          break;
        }
        items.push_back(scalar());
        skip_ws();
        if (peek() == ',') {
          ++pos_;
        } else if (peek() == ']') {
          ++pos_;
          break;
        } else {
          fail("expected ',' or ']' in array");
        }
      }
      return items;
    }
    return scalar();
  }

  Config::Scalar scalar() {
    skip_ws();
    const char c = peek();
    if (c == '"') return basic_string();
    if (c == '\'') return literal_string();
    const auto start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != ']' && text_[pos_] != '#' &&
           !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    std::string word(text_.substr(start, pos_ - start));
    if (word == "true") return true;
    if (word == "false") return false;
    std::string digits;
    for (char ch : word) {
      if (ch != '_') digits.push_back(ch);
    }
    if (digits.empty()) fail("missing value");
    std::int64_t iv = 0;
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), iv);
    if (ec == std::errc() && p == digits.data() + digits.size()) return iv;
    char* end = nullptr;
    const double dv = std::strtod(digits.c_str(), &end);
    if (end == digits.c_str() + digits.size()) return dv;
    fail("unrecognized value '" + word + "'");
  }

 private:
  std::string basic_string() {
    ++pos_;
    std::string out;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      char c = text_[pos_++];
      if (c == '\\') {
        if (pos_ >= text_.size()) fail("dangling escape");
        const char e = text_[pos_++];
        switch (e) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case 'r': out.push_back('\r'); break;
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        out.push_back(c);
      }
    }
    if (pos_ >= text_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  std::string literal_string() {
    ++pos_;
    const auto end = text_.find('\'', pos_);
    if (end == std::string_view::npos) fail("unterminated literal string");
    std::string out(text_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return out;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_;
};

std::string strip_key(std::string_view key) {
  key = trim(key);
  if (key.size() >= 2 && (key.front() == '"' || key.front() == '\'') && key.back() == key.front()) {
    key = key.substr(1, key.size() - 2);
  }
  return std::string(key);
}

int bracket_balance(std::string_view text) {
  int depth = 0;
  char quote = 0;
  for (char c : text) {
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      break;
    } else if (c == '[') {
      ++depth;
    } else if (c == ']') {
      --depth;
    }
  }
  return depth;
}

std::string scalar_text(const Config::Scalar& s) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return v;
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else if constexpr (std::is_same_v<T, double>) {
          std::ostringstream os;
          os.precision(17);
          os << v;
          return os.str();
        } else {
          return std::to_string(v);
        }
      },
      s);
}

Config::Scalar parse_env_scalar(const std::string& raw) {
  Scanner sc(raw, 0);
  try {
    auto v = sc.scalar();
    if (sc.done()) return v;
  } catch (const ConfigError&) {
  }
  return raw;
}

}  // namespace

Config Config::parse(std::string_view text) {
  Config cfg;
  std::string table;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = trim(lines[i]);
    const int line_no = static_cast<int>(i + 1);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      const auto close = line.find(']');
      if (close == std::string_view::npos) {
        throw ConfigError("config line " + std::to_string(line_no) + ": unterminated table header");
      }
      table = strip_key(line.substr(1, close - 1));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = strip_key(line.substr(0, eq));
    std::string rhs(line.substr(eq + 1));
    // Multi-line arrays: keep appending lines until brackets balance.
    while (bracket_balance(rhs) > 0 && i + 1 < lines.size()) {
      rhs += "\n" + lines[++i];
    }
    Scanner sc(rhs, line_no);
    Value v = sc.value();
    if (!sc.done()) sc.fail("trailing characters after value");
    cfg.values_[table.empty() ? key : table + "." + key] = std::move(v);
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string Config::env_name(const std::string& key) {
  std::string out = "HOW2_";
  for (char c : key) {
    out.push_back(std::isalnum(static_cast<unsigned char>(c))
                      ? static_cast<char>(std::toupper(static_cast<unsigned char>(c)))
                      : '_');
  }
  return out;
}

bool Config::contains(const std::string& key) const {
  return std::getenv(env_name(key).c_str()) != nullptr || values_.count(key) > 0;
}

namespace {

std::optional<Config::Value> lookup(const std::map<std::string, Config::Value>& values,
                                    const std::string& key) {
  if (const char* env = std::getenv(Config::env_name(key).c_str())) {
    return Config::Value(parse_env_scalar(env));
  }
  const auto it = values.find(key);
  if (it == values.end()) return std::nullopt;
  return it->second;
}

const Config::Scalar* as_scalar(const Config::Value& v) { return std::get_if<Config::Scalar>(&v); }

}  // namespace

std::optional<std::string> Config::get_string(const std::string& key) const {
  auto v = lookup(values_, key);
  if (!v) return std::nullopt;
  const auto* s = as_scalar(*v);
  if (!s) throw ConfigError("config key " + key + " must be a scalar");
  return scalar_text(*s);
}

std::optional<std::int64_t> Config::get_int(const std::string& key) const {
  auto v = lookup(values_, key);
  if (!v) return std::nullopt;
  const auto* s = as_scalar(*v);
  if (s) {
    if (const auto* i = std::get_if<std::int64_t>(s)) return *i;
  }
  throw ConfigError("config key " + key + " must be an integer");
}

std::optional<double> Config::get_number(const std::string& key) const {
  auto v = lookup(values_, key);
  if (!v) return std::nullopt;
  const auto* s = as_scalar(*v);
  if (s) {
    if (const auto* i = std::get_if<std::int64_t>(s)) return static_cast<double>(*i);
    if (const auto* d = std::get_if<double>(s)) return *d;
  }
  throw ConfigError("config key " + key + " must be a number");
}

std::optional<bool> Config::get_bool(const std::string& key) const {
  auto v = lookup(values_, key);
  if (!v) return std::nullopt;
  const auto* s = as_scalar(*v);
  if (s) {
    if (const auto* b = std::get_if<bool>(s)) return *b;
  }
  throw ConfigError("config key " + key + " must be a boolean");
}

std::optional<std::vector<std::string>> Config::get_string_list(const std::string& key) const {
  if (const char* env = std::getenv(env_name(key).c_str())) {
    // Environment lists are comma separated.
    std::vector<std::string> out;
    std::string_view rest(env);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      out.emplace_back(trim(rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    return out;
  }
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  std::vector<std::string> out;
  if (const auto* list = std::get_if<std::vector<Scalar>>(&it->second)) {
    for (const auto& s : *list) out.push_back(scalar_text(s));
  } else {
    out.push_back(scalar_text(std::get<Scalar>(it->second)));
  }
  return out;
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [key, value] : values_) {
    out += key + "=";
    if (const auto* s = as_scalar(value)) {
      out += scalar_text(*s);
    } else {
      out += "[";
      for (const auto& item : std::get<std::vector<Scalar>>(value)) out += scalar_text(item) + ",";
      out += "]";
    }
    out += "\n";
  }
  return out;
}

}  // namespace how2::util

#include "how2/corpus/tokenizer.hpp"

#include <unicode/uchar.h>

#include <array>
#include <climits>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "how2/util/error.hpp"
#include "how2/util/text.hpp"

#ifndef HOW2_DEFAULT_DATA_DIR
#define HOW2_DEFAULT_DATA_DIR "data"
#endif

namespace how2::corpus {
namespace {

bool is_letter(char32_t cp) {
  switch (u_charType(static_cast<UChar32>(cp))) {
    case U_UPPERCASE_LETTER:
    case U_LOWERCASE_LETTER:
    case U_TITLECASE_LETTER:
    case U_MODIFIER_LETTER:
    case U_OTHER_LETTER:
      return true;
    default:
      return false;
  }
}

bool is_number(char32_t cp) {
  switch (u_charType(static_cast<UChar32>(cp))) {
    case U_DECIMAL_DIGIT_NUMBER:
    case U_LETTER_NUMBER:
    case U_OTHER_NUMBER:
      return true;
    default:
      return false;
  }
}

bool is_space(char32_t cp) { return u_isUWhiteSpace(static_cast<UChar32>(cp)) != 0; }

// GPT-2 byte -> printable code point table.
const std::array<std::string, 256>& byte_symbols() {
  static const std::array<std::string, 256> table = [] {
    std::array<char32_t, 256> cps{};
    std::array<bool, 256> direct{};
    for (int b = '!'; b <= '~'; ++b) direct[b] = true;
    for (int b = 0xA1; b <= 0xAC; ++b) direct[b] = true;
    for (int b = 0xAE; b <= 0xFF; ++b) direct[b] = true;
    char32_t next = 256;
    for (int b = 0; b < 256; ++b) cps[b] = direct[b] ? static_cast<char32_t>(b) : next++;
    std::array<std::string, 256> out;
    for (int b = 0; b < 256; ++b) util::append_utf8(out[b], cps[b]);
    return out;
  }();
  return table;
}

std::string pair_key(const std::string& a, const std::string& b) { return a + '\x01' + b; }

}  // namespace

std::size_t WhitespaceCounter::count(std::string_view text) const {
  return util::split_whitespace(text).size();
}

// Hand-rolled equivalent of the pattern
//   's|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+
std::vector<std::string> ByteLevelBpe::pre_tokenize(std::string_view text) {
  const std::u32string cps = util::decode_utf8(text);
  const std::size_t n = cps.size();
  std::vector<std::string> pieces;
  auto emit = [&](std::size_t from, std::size_t to) {
    std::string piece;
    for (std::size_t k = from; k < to; ++k) util::append_utf8(piece, cps[k]);
    pieces.push_back(std::move(piece));
  };
  auto other = [](char32_t c) { return !is_space(c) && !is_letter(c) && !is_number(c); };

  std::size_t i = 0;
  while (i < n) {
    if (cps[i] == U'\'') {
      static constexpr std::array<std::u32string_view, 7> kContractions = {U"s", U"t", U"re", U"ve",
                                                                           U"m", U"ll", U"d"};
      bool matched = false;
      for (auto suffix : kContractions) {
        if (i + 1 + suffix.size() <= n &&
            std::u32string_view(cps).substr(i + 1, suffix.size()) == suffix) {
          emit(i, i + 1 + suffix.size());
          i += 1 + suffix.size();
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    const std::size_t body = (cps[i] == U' ' && i + 1 < n) ? i + 1 : i;
    bool (*classes[])(char32_t) = {is_letter, is_number};
    bool matched = false;
    for (auto cls : classes) {
      if (body < n && cls(cps[body])) {
        std::size_t j = body;
        while (j < n && cls(cps[j])) ++j;
        emit(i, j);
        i = j;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (body < n && other(cps[body])) {
      std::size_t j = body;
      while (j < n && other(cps[j])) ++j;
      emit(i, j);
      i = j;
      continue;
    }
    // Whitespace run: leave the final space for the following token.
    std::size_t j = i;
    while (j < n && is_space(cps[j])) ++j;
    if (j == n) {
      emit(i, j);
      i = j;
    } else if (j - i >= 2) {
      emit(i, j - 1);
      i = j - 1;
    } else {
      emit(i, i + 1);
      i += 1;
    }
  }
  return pieces;
}

std::vector<std::string> ByteLevelBpe::bpe(const std::string& piece) const {
  const auto& symbols_for = byte_symbols();
  std::vector<std::string> symbols;
  symbols.reserve(piece.size());
  for (unsigned char b : piece) symbols.push_back(symbols_for[b]);

  while (symbols.size() > 1) {
    std::size_t best_rank = SIZE_MAX;
    std::size_t best_pos = 0;
    for (std::size_t k = 0; k + 1 < symbols.size(); ++k) {
      const auto it = merge_ranks_.find(pair_key(symbols[k], symbols[k + 1]));
      if (it != merge_ranks_.end() && it->second < best_rank) {
        best_rank = it->second;
        best_pos = k;
      }
    }
    if (best_rank == SIZE_MAX) break;
    const std::string left = symbols[best_pos];
    const std::string right = symbols[best_pos + 1];
    std::vector<std::string> merged;
    merged.reserve(symbols.size());
    for (std::size_t k = 0; k < symbols.size();) {
      if (k + 1 < symbols.size() && symbols[k] == left && symbols[k + 1] == right) {
        merged.push_back(left + right);
        k += 2;
      } else {
        merged.push_back(symbols[k]);
        ++k;
      }
    }
    symbols = std::move(merged);
  }
  return symbols;
}

std::vector<std::string> ByteLevelBpe::encode(std::string_view text) const {
  std::vector<std::string> tokens;
  for (const auto& piece : pre_tokenize(text)) {
    auto part = bpe(piece);
    tokens.insert(tokens.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return tokens;
}

std::unique_ptr<ByteLevelBpe> ByteLevelBpe::from_json_text(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("tokenizer table is not valid JSON: ") + e.what());
  }
  const auto model = doc.find("model");
  if (model == doc.end() || model->value("type", "") != "BPE") {
    throw ConfigError("tokenizer table must contain a BPE model");
  }
  const auto merges = model->find("merges");
  if (merges == model->end() || !merges->is_array()) throw ConfigError("tokenizer table has no merges");
  auto bpe = std::unique_ptr<ByteLevelBpe>(new ByteLevelBpe());
  std::size_t rank = 0;
  for (const auto& m : *merges) {
    std::string left, right;
    if (m.is_string()) {
      const auto s = m.get<std::string>();
      const auto sp = s.find(' ');
      if (sp == std::string::npos) throw ConfigError("malformed merge '" + s + "'");
      left = s.substr(0, sp);
      right = s.substr(sp + 1);
    } else if (m.is_array() && m.size() == 2) {
      left = m[0].get<std::string>();
      right = m[1].get<std::string>();
    } else {
      throw ConfigError("malformed merge entry");
    }
    bpe->merge_ranks_.emplace(pair_key(left, right), rank++);
  }
  return bpe;
}

std::unique_ptr<ByteLevelBpe> ByteLevelBpe::from_tokenizer_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read tokenizer table " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

TokenizerRegistry::TokenizerRegistry() { add("whitespace", std::make_shared<WhitespaceCounter>()); }

void TokenizerRegistry::add(const std::string& scheme, std::shared_ptr<const TokenCounter> counter) {
  counters_[scheme] = std::move(counter);
}

bool TokenizerRegistry::contains(std::string_view scheme) const { return counters_.find(scheme) != counters_.end(); }

const TokenCounter& TokenizerRegistry::get(std::string_view scheme) const {
  const auto it = counters_.find(scheme);
  if (it == counters_.end()) {
    throw ConfigError("tokenization scheme '" + std::string(scheme) + "' is not registered");
  }
  return *it->second;
}

std::vector<std::string> TokenizerRegistry::schemes() const {
  std::vector<std::string> out;
  for (const auto& [name, counter] : counters_) out.push_back(name);
  return out;
}

TokenizerRegistry TokenizerRegistry::with_data_dir(const std::filesystem::path& tokenizers_dir) {
  TokenizerRegistry reg;
  std::error_code ec;
  if (!std::filesystem::is_directory(tokenizers_dir, ec)) return reg;
  for (const auto& entry : std::filesystem::directory_iterator(tokenizers_dir)) {
    if (entry.path().extension() == ".json") {
      reg.add(entry.path().stem().string(), ByteLevelBpe::from_tokenizer_json(entry.path()));
    }
  }
  return reg;
}

const TokenizerRegistry& default_registry() {
  static const TokenizerRegistry reg = [] {
    const char* env = std::getenv("HOW2_DATA_DIR");
    const std::filesystem::path root = env ? env : HOW2_DEFAULT_DATA_DIR;
    return TokenizerRegistry::with_data_dir(root / "tokenizers");
  }();
  return reg;
}

std::size_t count_tokens(std::string_view text, std::string_view scheme) {
  return default_registry().count(text, scheme);
}

std::size_t count_step_tokens(const std::vector<std::string>& steps, const TokenizerRegistry& registry,
                              std::string_view scheme) {
  const auto& counter = registry.get(scheme);
  std::size_t total = 0;
  for (const auto& step : steps) total += counter.count(step);
  return total;
}

}  // namespace how2::corpus

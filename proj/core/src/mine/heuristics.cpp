#include "how2/mine/heuristics.hpp"

#include <unicode/uchar.h>

#include <unordered_map>

#include "how2/util/error.hpp"
#include "how2/util/text.hpp"

namespace how2::mine {

void HeuristicsConfig::validate() const {
  if (min_steps < 1) throw ConfigError("heuristics min_steps must be >= 1");
  if (max_steps < min_steps) throw ConfigError("heuristics max_steps must be >= min_steps");
  for (const auto& [n, threshold] : rep_thresholds) {
    if (n < 1) throw ConfigError("heuristics n-gram order must be >= 1");
    if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("heuristics thresholds must lie in (0, 1]");
  }
}

std::string normalize_step(std::string_view step) {
  std::string out;
  out.reserve(step.size());
  bool pending_space = false;
  for (char32_t cp : util::decode_utf8(step)) {
    const auto c = static_cast<UChar32>(cp);
    if (u_isUWhiteSpace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (u_ispunct(c)) continue;
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    util::append_utf8(out, static_cast<char32_t>(u_tolower(c)));
  }
  return out;
}

double pooled_repetition_rate(const std::vector<std::string>& steps, std::size_t n) {
  if (n < 1) throw ValidationError("n-gram order must be >= 1");
  std::unordered_map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& step : steps) {
    const auto tokens = util::split_whitespace(normalize_step(step));
    if (tokens.size() < n) continue;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      std::string gram = tokens[i];
      for (std::size_t k = 1; k < n; ++k) {
        gram.push_back('\x1f');
        gram += tokens[i + k];
      }
      ++counts[gram];
      ++total;
    }
  }
  if (total == 0) return 0.0;
  std::size_t repeated = 0;
  for (const auto& [gram, c] : counts) repeated += c - 1;
  return static_cast<double>(repeated) / static_cast<double>(total);
}

std::string repetition_reason(std::size_t n) {
  switch (n) {
    case 2: return "bigram_repetition";
    case 3: return "trigram_repetition";
    case 4: return "fourgram_repetition";
    default: return std::to_string(n) + "gram_repetition";
  }
}

FilterDecision heuristic_filter(const std::vector<std::string>& steps, const HeuristicsConfig& cfg) {
  if (steps.size() < cfg.min_steps || steps.size() > cfg.max_steps) return FilterDecision::reject("step_count");
  for (const auto& [n, threshold] : cfg.rep_thresholds) {
    if (pooled_repetition_rate(steps, n) >= threshold) return FilterDecision::reject(repetition_reason(n));
  }
  return FilterDecision::accept();
}

}  // namespace how2::mine

#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace how2::mine {

struct HeuristicsConfig {
  std::size_t min_steps = 5;
  std::size_t max_steps = 15;
  // n -> rejection threshold; a rate at or above the threshold rejects.
  std::map<std::size_t, double> rep_thresholds{{2, 0.40}, {3, 0.35}, {4, 0.30}};

  void validate() const;
};

/// Lower-cases, drops every Unicode punctuation (P*) code point, collapses
/// whitespace runs to one space and trims.
std::string normalize_step(std::string_view step);

/// Fraction of n-grams repeated beyond their first occurrence. N-grams are
/// formed inside each normalized step (never across steps) and counted over
/// the pooled multiset. Returns 0 for an empty pool.
double pooled_repetition_rate(const std::vector<std::string>& steps, std::size_t n);

struct FilterDecision {
  bool pass = true;
  std::string reason;  // empty on pass

  static FilterDecision accept() { return {}; }
  static FilterDecision reject(std::string why) { return {false, std::move(why)}; }
};

/// Step-count check first, then repetition thresholds in increasing n;
/// the reason names the first violated rule ("step_count",
/// "bigram_repetition", "trigram_repetition", "fourgram_repetition", or
/// "<n>gram_repetition" for other orders).
FilterDecision heuristic_filter(const std::vector<std::string>& steps, const HeuristicsConfig& cfg);

std::string repetition_reason(std::size_t n);

}  // namespace how2::mine

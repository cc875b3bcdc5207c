#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "how2/corpus/records.hpp"

namespace how2::scoring {

bool step_count_mismatch(const std::vector<std::string>& generated, const std::vector<std::string>& reference);

/// Verbatim repeat of any step string; no normalization.
bool duplicate_steps(const std::vector<std::string>& steps);

/// Steps joined with single spaces, whitespace-tokenized, n-grams taken over
/// the whole sequence (crossing step boundaries). Repeated fraction beyond
/// first occurrence; 0 for an empty pool. Throws ValidationError for n < 1.
double dup_ngram_rate(const std::vector<std::string>& steps, std::size_t n);

/// Unweighted mean of dup_ngram_rate over n = 1..4.
double mean_dup_ngram_rate(const std::vector<std::string>& steps);

struct FormatReport {
  std::size_t n_generations = 0;
  std::size_t n_skipped = 0;  // failed generations or unknown instances
  double step_count_mismatch_rate = 0.0;
  double duplicate_steps_rate = 0.0;
  double mean_dup_ngram_rate = 0.0;

  nlohmann::ordered_json to_json() const;
};

/// Dataset means of the three proxies over generations paired with their instance.
FormatReport format_report(const std::vector<corpus::ProcedureInstance>& instances,
                           const std::vector<corpus::GenerationRecord>& gens);

}  // namespace how2::scoring

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "how2/corpus/records.hpp"

namespace how2::scoring {

struct TopicScore {
  std::size_t n_examples = 0;
  std::size_t n_no_failure = 0;
  double rate = 0.0;
};

struct ScoreSummary {
  double overall = 0.0;
  std::size_t n_examples = 0;    // valid judgments used
  std::size_t n_no_failure = 0;
  std::size_t n_invalid = 0;     // excluded, never imputed
  std::map<corpus::Topic, TopicScore> per_topic;
  std::optional<double> avg_gen_tokens;
  std::optional<double> avg_gen_ref_ratio;

  nlohmann::ordered_json to_json() const;
};

/// Fraction of valid judgments labelled no_failure, with the per-topic
/// split. When `gens` is given, token averages are taken over the
/// generations the valid judgments refer to. Throws UndefinedError when no
/// valid judgment remains.
ScoreSummary score(const std::vector<corpus::JudgmentRecord>& judgments,
                   const std::vector<corpus::GenerationRecord>* gens = nullptr);

struct ConsistencyResult {
  std::vector<std::pair<corpus::JudgmentRecord, corpus::JudgmentRecord>> retained;
  std::size_t dropped = 0;
};

/// Keeps pairs whose binary labels agree across two judging runs. Runs are
/// matched on (instance_id, generation_id); a key present in only one run,
/// or repeated within a run, raises AlignmentError. Invalid judgments count
/// as disagreements. Output follows run A.
ConsistencyResult consistency_filter(const std::vector<corpus::JudgmentRecord>& run_a,
                                     const std::vector<corpus::JudgmentRecord>& run_b);

}  // namespace how2::scoring

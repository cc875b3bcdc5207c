#include "how2/scoring/format_metrics.hpp"

#include <unordered_map>
#include <unordered_set>

#include "how2/util/error.hpp"
#include "how2/util/text.hpp"

namespace how2::scoring {

bool step_count_mismatch(const std::vector<std::string>& generated, const std::vector<std::string>& reference) {
  return generated.size() != reference.size();
}

bool duplicate_steps(const std::vector<std::string>& steps) {
  std::unordered_set<std::string> seen;
  for (const auto& s : steps) {
    if (!seen.insert(s).second) return true;
  }
  return false;
}

double dup_ngram_rate(const std::vector<std::string>& steps, std::size_t n) {
  if (n < 1) throw ValidationError("n-gram order must be >= 1");
  const auto tokens = util::split_whitespace(util::join(steps, " "));
  if (tokens.size() < n) return 0.0;
  std::unordered_map<std::string, std::size_t> counts;
  const std::size_t total = tokens.size() - n + 1;
  for (std::size_t i = 0; i < total; ++i) {
    std::string gram = tokens[i];
    for (std::size_t k = 1; k < n; ++k) {
      gram.push_back('\x1f');
      gram += tokens[i + k];
    }
    ++counts[gram];
  }
  std::size_t repeated = 0;
  for (const auto& [gram, c] : counts) repeated += c - 1;
  return static_cast<double>(repeated) / static_cast<double>(total);
}

double mean_dup_ngram_rate(const std::vector<std::string>& steps) {
  double sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) sum += dup_ngram_rate(steps, n);
  return sum / 4.0;
}

nlohmann::ordered_json FormatReport::to_json() const {
  return {{"n_generations", n_generations},
          {"n_skipped", n_skipped},
          {"step_count_mismatch_rate", step_count_mismatch_rate},
          {"duplicate_steps_rate", duplicate_steps_rate},
          {"mean_dup_ngram_rate", mean_dup_ngram_rate}};
}

FormatReport format_report(const std::vector<corpus::ProcedureInstance>& instances,
                           const std::vector<corpus::GenerationRecord>& gens) {
  std::unordered_map<std::string, const corpus::ProcedureInstance*> by_id;
  for (const auto& inst : instances) by_id.emplace(inst.id, &inst);
  FormatReport r;
  std::size_t mismatches = 0, duplicates = 0;
  double dup_rate = 0.0;
  for (const auto& gen : gens) {
    const auto it = by_id.find(gen.instance_id);
    if (gen.failed || it == by_id.end()) {
      ++r.n_skipped;
      continue;
    }
    ++r.n_generations;
    mismatches += step_count_mismatch(gen.steps, it->second->steps) ? 1 : 0;
    duplicates += duplicate_steps(gen.steps) ? 1 : 0;
    dup_rate += mean_dup_ngram_rate(gen.steps);
  }
  if (r.n_generations) {
    const auto n = static_cast<double>(r.n_generations);
    r.step_count_mismatch_rate = static_cast<double>(mismatches) / n;
    r.duplicate_steps_rate = static_cast<double>(duplicates) / n;
    r.mean_dup_ngram_rate = dup_rate / n;
  }
  return r;
}

}  // namespace how2::scoring

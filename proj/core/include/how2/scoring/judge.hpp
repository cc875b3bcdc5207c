#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "how2/corpus/records.hpp"
#include "how2/gateway/gateway.hpp"

namespace how2::util {
class PromptLibrary;
}

namespace how2::scoring {

/// Judge replies are either a JSON object
///   {"critical_failures": [{"description": ..., "reference_steps": [..], "generated_steps": [..]}]}
/// (possibly wrapped in prose or a code fence) or a reply stating
/// "no critical failures". Anything else raises ParseError. Step references
/// must lie in [1, n_reference] and [1, n_generated] respectively.
std::vector<corpus::CriticalFailure> parse_judge_reply(std::string_view reply, std::size_t n_reference,
                                                       std::size_t n_generated);

struct JudgeConfig {
  std::string judge_id;
  // Overrides for a second judging run; unset fields fall back to the gateway defaults.
  std::optional<double> temperature;
  std::optional<std::int64_t> seed;
  std::size_t max_workers = 0;  // 0: the gateway's max_in_flight
};

std::string build_judge_prompt(const corpus::ProcedureInstance& inst, const std::vector<std::string>& generated_steps,
                               const util::PromptLibrary& prompts);

/// A reply that does not parse, or a generation that failed upstream,
/// yields valid = false with the reason in `error`.
corpus::JudgmentRecord judge_example(const corpus::ProcedureInstance& inst, const corpus::GenerationRecord& gen,
                                     gateway::ModelGateway& gateway, const util::PromptLibrary& prompts,
                                     const JudgeConfig& config);

/// Judges every generation whose instance is in `instances`; a generation
/// with no matching instance raises AlignmentError. Output follows `gens`.
std::vector<corpus::JudgmentRecord> run_judging(const std::vector<corpus::ProcedureInstance>& instances,
                                                const std::vector<corpus::GenerationRecord>& gens,
                                                gateway::ModelGateway& gateway, const util::PromptLibrary& prompts,
                                                const JudgeConfig& config);

}  // namespace how2::scoring

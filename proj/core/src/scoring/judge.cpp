#include "how2/scoring/judge.hpp"

#include <unordered_map>

#include <nlohmann/json.hpp>

#include "how2/corpus/numbered_list.hpp"
#include "how2/util/error.hpp"
#include "how2/util/parallel.hpp"
#include "how2/util/prompt_library.hpp"
#include "how2/util/text.hpp"

namespace how2::scoring {

using corpus::CriticalFailure;

namespace {

std::vector<int> step_refs(const nlohmann::json& j, const char* field, std::size_t limit) {
  std::vector<int> out;
  const auto it = j.find(field);
  if (it == j.end() || it->is_null()) return out;
  if (!it->is_array()) throw ParseError(std::string("judge field '") + field + "' must be an array");
  for (const auto& v : *it) {
    if (!v.is_number_integer()) throw ParseError(std::string("judge field '") + field + "' must hold integers");
    const auto k = v.get<long long>();
    if (k < 1 || static_cast<std::size_t>(k) > limit) {
      throw ParseError(std::string("judge field '") + field + "' references step " + std::to_string(k) +
                       " outside 1.." + std::to_string(limit));
    }
    out.push_back(static_cast<int>(k));
  }
  return out;
}

}  // namespace

std::vector<CriticalFailure> parse_judge_reply(std::string_view reply, std::size_t n_reference,
                                               std::size_t n_generated) {
  const auto open = reply.find('{');
  const auto close = reply.rfind('}');
  if (open != std::string_view::npos && close != std::string_view::npos && close > open) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(reply.substr(open, close - open + 1));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("judge reply JSON does not parse: ") + e.what());
    }
    const auto it = doc.find("critical_failures");
    if (it == doc.end() || !it->is_array()) throw ParseError("judge reply lacks a critical_failures array");
    std::vector<CriticalFailure> failures;
    for (const auto& f : *it) {
      if (!f.is_object()) throw ParseError("judge failure entry must be an object");
      const auto d = f.find("description");
      if (d == f.end() || !d->is_string() || util::trim(d->get<std::string>()).empty()) {
        throw ParseError("judge failure entry needs a non-empty description");
      }
      failures.push_back(CriticalFailure{d->get<std::string>(), step_refs(f, "reference_steps", n_reference),
                                         step_refs(f, "generated_steps", n_generated)});
    }
    return failures;
  }
  if (util::to_lower_ascii(reply).find("no critical failures") != std::string::npos) return {};
  throw ParseError("judge reply is neither a failure list nor a no-failure statement");
}

std::string build_judge_prompt(const corpus::ProcedureInstance& inst, const std::vector<std::string>& generated_steps,
                               const util::PromptLibrary& prompts) {
  return prompts.render("judge", {{"goal", inst.goal},
                                  {"resources", inst.resources.empty() ? "none" : util::join(inst.resources, "; ")},
                                  {"reference_steps", corpus::render_numbered(inst.steps)},
                                  {"generated_steps", corpus::render_numbered(generated_steps)}});
}

corpus::JudgmentRecord judge_example(const corpus::ProcedureInstance& inst, const corpus::GenerationRecord& gen,
                                     gateway::ModelGateway& gateway, const util::PromptLibrary& prompts,
                                     const JudgeConfig& config) {
  corpus::JudgmentRecord rec;
  rec.instance_id = inst.id;
  rec.generation_id = gen.generation_id();
  rec.judge_id = config.judge_id;
  rec.topic = inst.topic;
  if (gen.failed) {
    rec.valid = false;
    rec.error = "generation failed: " + gen.error;
    return rec;
  }
  auto params = gateway.default_params();
  if (config.temperature) params.temperature = *config.temperature;
  if (config.seed) params.seed = *config.seed;
  try {
    const auto reply = gateway.complete(build_judge_prompt(inst, gen.steps, prompts), params).response_text;
    rec.failures = parse_judge_reply(reply, inst.steps.size(), gen.steps.size());
  } catch (const Error& e) {
    switch (e.category()) {
      case ErrorCategory::parse:
      case ErrorCategory::gateway:
      case ErrorCategory::protocol:
        rec.valid = false;
        rec.error = std::string(to_string(e.category())) + ": " + e.what();
        break;
      default:
        throw;
    }
  }
  return rec;
}

std::vector<corpus::JudgmentRecord> run_judging(const std::vector<corpus::ProcedureInstance>& instances,
                                                const std::vector<corpus::GenerationRecord>& gens,
                                                gateway::ModelGateway& gateway, const util::PromptLibrary& prompts,
                                                const JudgeConfig& config) {
  std::unordered_map<std::string, const corpus::ProcedureInstance*> by_id;
  for (const auto& inst : instances) by_id.emplace(inst.id, &inst);
  std::vector<const corpus::ProcedureInstance*> matched;
  matched.reserve(gens.size());
  for (const auto& gen : gens) {
    const auto it = by_id.find(gen.instance_id);
    if (it == by_id.end()) throw AlignmentError("generation for unknown instance '" + gen.instance_id + "'");
    matched.push_back(it->second);
  }
  std::vector<corpus::JudgmentRecord> out(gens.size());
  const auto workers = config.max_workers ? config.max_workers : gateway.config().max_in_flight;
  util::parallel_for(gens.size(), workers,
                     [&](std::size_t i) { out[i] = judge_example(*matched[i], gens[i], gateway, prompts, config); });
  return out;
}

}  // namespace how2::scoring

#include "how2/mine/pipeline.hpp"

#include <algorithm>

#include "how2/corpus/numbered_list.hpp"
#include "how2/gateway/gateway.hpp"
#include "how2/util/error.hpp"
#include "how2/util/parallel.hpp"
#include "how2/util/prompt_library.hpp"
#include "how2/util/text.hpp"

namespace how2::mine {

using corpus::ProcedureInstance;
using corpus::SourceDocument;

std::string_view stage_name(Stage stage) noexcept {
  switch (stage) {
    case Stage::extraction: return "extraction";
    case Stage::heuristics: return "heuristics";
    case Stage::llm_filter: return "llm_filter";
    case Stage::postprocess: return "postprocess";
    case Stage::final_validation: return "final";
  }
  return "unknown";
}

void CandidateProcedure::record(Stage stage, bool pass, std::string reason) {
  stage_history.push_back(StageDecision{stage, pass, std::move(reason)});
}

void StageYieldReport::retain(Stage stage) {
  auto& s = stages_[static_cast<std::size_t>(stage)];
  ++s.input_count;
  ++s.retained_count;
}

void StageYieldReport::reject(Stage stage, const std::string& reason) {
  auto& s = stages_[static_cast<std::size_t>(stage)];
  ++s.input_count;
  ++s.rejected_count;
  ++s.reject_reasons[reason];
}

void StageYieldReport::merge(const StageYieldReport& other) {
  for (std::size_t k = 0; k < kStageCount; ++k) {
    auto& mine = stages_[k];
    const auto& theirs = other.stages_[k];
    mine.input_count += theirs.input_count;
    mine.retained_count += theirs.retained_count;
    mine.rejected_count += theirs.rejected_count;
    for (const auto& [reason, n] : theirs.reject_reasons) mine.reject_reasons[reason] += n;
  }
}

bool StageYieldReport::telescopes() const {
  for (std::size_t k = 0; k < kStageCount; ++k) {
    const auto& s = stages_[k];
    if (s.input_count != s.retained_count + s.rejected_count) return false;
    std::size_t reasons = 0;
    for (const auto& [reason, n] : s.reject_reasons) reasons += n;
    if (reasons != s.rejected_count) return false;
    if (k > 0 && s.input_count != stages_[k - 1].retained_count) return false;
  }
  return true;
}

nlohmann::ordered_json StageYieldReport::to_json() const {
  auto stages = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < kStageCount; ++k) {
    const auto& s = stages_[k];
    nlohmann::ordered_json reasons = nlohmann::ordered_json::object();
    for (const auto& [reason, n] : s.reject_reasons) reasons[reason] = n;
    stages.push_back({{"stage", stage_name(kStages[k])},
                      {"input_count", s.input_count},
                      {"retained_count", s.retained_count},
                      {"rejected_count", s.rejected_count},
                      {"reject_reasons", std::move(reasons)}});
  }
  return {{"stages", std::move(stages)}};
}

StageYieldReport StageYieldReport::from_json(const nlohmann::json& j) {
  StageYieldReport out;
  try {
    const auto& stages = j.at("stages");
    if (!stages.is_array() || stages.size() != kStageCount) throw ParseError("yield report needs 5 stages");
    for (std::size_t k = 0; k < kStageCount; ++k) {
      const auto& s = stages[k];
      if (s.at("stage").get<std::string>() != stage_name(kStages[k])) throw ParseError("yield report stage order");
      auto& dst = out.stages_[k];
      dst.input_count = s.at("input_count").get<std::size_t>();
      dst.retained_count = s.at("retained_count").get<std::size_t>();
      dst.rejected_count = s.at("rejected_count").get<std::size_t>();
      for (const auto& [reason, n] : s.at("reject_reasons").items()) dst.reject_reasons[reason] = n.get<std::size_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed yield report: ") + e.what());
  }
  return out;
}

namespace {

std::string upper_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return out;
}

// First non-blank line, trimmed.
std::string first_line(std::string_view reply) {
  for (const auto& line : util::split_lines(reply)) {
    const auto t = util::trim(line);
    if (!t.empty()) return std::string(t);
  }
  return {};
}

// Strips a leading "LABEL:" (case-insensitive) and returns the rest, trimmed.
std::optional<std::string> labelled(std::string_view line, std::string_view label) {
  const auto t = util::trim(line);
  if (!util::starts_with_icase(t, label)) return std::nullopt;
  auto rest = t.substr(label.size());
  if (rest.empty() || rest.front() != ':') return std::nullopt;
  return std::string(util::trim(rest.substr(1)));
}

// Locates "GOAL: ..." and returns (goal, text after the goal line).
std::optional<std::pair<std::string, std::string>> find_goal(std::string_view reply) {
  const auto lines = util::split_lines(reply);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (auto goal = labelled(lines[i], "GOAL")) {
      std::vector<std::string> rest(lines.begin() + static_cast<std::ptrdiff_t>(i + 1), lines.end());
      return std::make_pair(*goal, util::join(rest, "\n"));
    }
  }
  return std::nullopt;
}

std::string render_list(const std::vector<std::string>& items) {
  if (items.empty()) return "(none)";
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += '\n';
    out += "- " + item;
  }
  return out;
}

bool is_gateway_failure(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::gateway:
    case ErrorCategory::protocol:
    case ErrorCategory::capability:
      return true;
    default:
      return false;
  }
}

// Maps stage-local failures onto rejection reasons; configuration and other
// programming errors propagate.
template <typename Fn>
FilterDecision guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const ParseError&) {
    return FilterDecision::reject("parse_failure");
  } catch (const Error& e) {
    if (is_gateway_failure(e)) return FilterDecision::reject("gateway_error");
    throw;
  }
}

}  // namespace

ExtractionReply parse_extraction_reply(std::string_view reply) {
  ExtractionReply out;
  if (upper_ascii(first_line(reply)).starts_with("NO_PROCEDURE")) {
    out.no_procedure = true;
    return out;
  }
  auto goal = find_goal(reply);
  if (!goal) throw ParseError("extraction reply has no GOAL line");
  if (goal->first.empty()) throw ParseError("extraction reply has an empty goal");
  out.goal = goal->first;
  out.steps = corpus::final_numbered_list(goal->second).items;
  if (out.steps.empty()) throw ParseError("extraction reply has no numbered steps");
  return out;
}

std::string parse_filter_reply(std::string_view reply) {
  const auto line = first_line(reply);
  if (upper_ascii(line) == "PASS") return "none";
  if (auto rest = labelled(line, "REJECT")) {
    const auto category = util::to_lower_ascii(*rest);
    if (std::find(kFilterCategories.begin(), kFilterCategories.end(), category) != kFilterCategories.end()) {
      return category;
    }
    throw ParseError("filter reply names unknown category '" + *rest + "'");
  }
  throw ParseError("filter reply is neither PASS nor REJECT");
}

RewriteReply parse_rewrite_reply(std::string_view reply) {
  auto goal = find_goal(reply);
  if (!goal || goal->first.empty()) throw ParseError("rewrite reply has no GOAL");
  RewriteReply out;
  out.goal = goal->first;
  auto steps = corpus::final_numbered_list(goal->second).items;
  if (!steps.empty()) out.steps = std::move(steps);
  return out;
}

std::vector<std::string> parse_resources_reply(std::string_view reply) {
  std::string body(util::trim(reply));
  if (auto rest = labelled(body, "RESOURCES")) body = *rest;
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    auto item = std::string(util::trim(current));
    current.clear();
    if (item.starts_with("- ") || item.starts_with("* ")) item = std::string(util::trim(item.substr(2)));
    if (item.empty() || util::to_lower_ascii(item) == "none") return;
    out.push_back(std::move(item));
  };
  for (char c : body) {
    if (c == ';' || c == '\n') {
      flush();
    } else {
      current.push_back(c);
    }
  }
  flush();
  return out;
}

bool parse_final_reply(std::string_view reply) {
  auto word = upper_ascii(first_line(reply));
  while (!word.empty() && (word.back() == '.' || word.back() == '!')) word.pop_back();
  if (word == "VALID") return true;
  if (word == "INVALID") return false;
  throw ParseError("final reply is neither VALID nor INVALID");
}

MinePipeline::MinePipeline(gateway::ModelGateway& gateway, const util::PromptLibrary& prompts, PipelineConfig config)
    : gateway_(gateway), prompts_(prompts), config_(std::move(config)) {
  config_.heuristics.validate();
}

ExtractOutcome MinePipeline::extract_procedure(const SourceDocument& doc) const {
  ExtractOutcome out;
  const auto decision = guarded([&] {
    const auto prompt = prompts_.render("pipeline_extract", {{"document", doc.body}});
    const auto reply = parse_extraction_reply(gateway_.complete(prompt).response_text);
    if (reply.no_procedure) return FilterDecision::reject("no_procedure");
    CandidateProcedure cand;
    cand.document_id = doc.id;
    cand.topic = doc.topic;
    cand.source_url = doc.url;
    cand.goal = reply.goal;
    cand.steps = reply.steps;
    out.candidate = std::move(cand);
    return FilterDecision::accept();
  });
  if (!decision.pass) out.reason = decision.reason;
  return out;
}

FilterDecision MinePipeline::llm_filter(const CandidateProcedure& cand) const {
  return guarded([&] {
    const auto prompt =
        prompts_.render("pipeline_llm_filter", {{"goal", cand.goal}, {"steps", corpus::render_numbered(cand.steps)}});
    const auto category = parse_filter_reply(gateway_.complete(prompt).response_text);
    return category == "none" ? FilterDecision::accept() : FilterDecision::reject(category);
  });
}

FilterDecision MinePipeline::postprocess(CandidateProcedure& cand) const {
  return guarded([&] {
    const auto rewrite_prompt = prompts_.render("pipeline_postprocess_rewrite",
                                                {{"goal", cand.goal}, {"steps", corpus::render_numbered(cand.steps)}});
    auto rewrite = parse_rewrite_reply(gateway_.complete(rewrite_prompt).response_text);
    auto steps = rewrite.steps.value_or(cand.steps);

    const auto resource_prompt = prompts_.render("pipeline_postprocess_extract_resources",
                                                 {{"goal", rewrite.goal}, {"steps", corpus::render_numbered(steps)}});
    auto resources = parse_resources_reply(gateway_.complete(resource_prompt).response_text);

    cand.goal = std::move(rewrite.goal);
    cand.steps = std::move(steps);
    cand.resources = std::move(resources);
    if (cand.steps.size() < config_.heuristics.min_steps || cand.steps.size() > config_.heuristics.max_steps) {
      return FilterDecision::reject("step_count");
    }
    return FilterDecision::accept();
  });
}

FilterDecision MinePipeline::final_validate(const CandidateProcedure& cand) const {
  return guarded([&] {
    const auto prompt = prompts_.render("pipeline_final_filter", {{"goal", cand.goal},
                                                                  {"resources", render_list(cand.resources)},
                                                                  {"steps", corpus::render_numbered(cand.steps)}});
    return parse_final_reply(gateway_.complete(prompt).response_text) ? FilterDecision::accept()
                                                                       : FilterDecision::reject("invalid");
  });
}

CandidateProcedure MinePipeline::process(const SourceDocument& doc) const {
  auto extracted = extract_procedure(doc);
  if (!extracted.candidate) {
    CandidateProcedure cand;
    cand.document_id = doc.id;
    cand.topic = doc.topic;
    cand.source_url = doc.url;
    cand.record(Stage::extraction, false, extracted.reason);
    return cand;
  }
  auto cand = std::move(*extracted.candidate);
  cand.record(Stage::extraction, true);

  auto step = [&](Stage stage, const FilterDecision& d) {
    cand.record(stage, d.pass, d.reason);
    return d.pass;
  };
  if (!step(Stage::heuristics, heuristic_filter(cand.steps, config_.heuristics))) return cand;
  if (!step(Stage::llm_filter, llm_filter(cand))) return cand;
  if (!step(Stage::postprocess, postprocess(cand))) return cand;
  step(Stage::final_validation, final_validate(cand));
  return cand;
}

PipelineResult MinePipeline::run(const std::vector<SourceDocument>& docs) const {
  std::vector<CandidateProcedure> outcomes(docs.size());
  const auto workers = config_.max_workers ? config_.max_workers : gateway_.config().max_in_flight;
  util::parallel_for(docs.size(), workers, [&](std::size_t i) { outcomes[i] = process(docs[i]); });

  PipelineResult result;
  for (auto& cand : outcomes) {
    for (const auto& d : cand.stage_history) {
      if (d.pass) {
        result.report.retain(d.stage);
      } else {
        result.report.reject(d.stage, d.reason);
      }
    }
    if (passed_all_stages(cand)) {
      result.instances.push_back(to_instance(cand));
    } else {
      result.rejected.push_back(std::move(cand));
    }
  }
  return result;
}

bool passed_all_stages(const CandidateProcedure& cand) {
  return cand.stage_history.size() == kStageCount &&
         std::all_of(cand.stage_history.begin(), cand.stage_history.end(), [](const auto& d) { return d.pass; });
}

ProcedureInstance to_instance(const CandidateProcedure& cand) {
  if (!passed_all_stages(cand)) throw ValidationError("candidate " + cand.document_id + " did not pass every stage");
  ProcedureInstance inst;
  inst.id = cand.document_id;
  inst.topic = cand.topic;
  inst.goal = cand.goal;
  inst.resources = cand.resources;
  inst.steps = cand.steps;
  inst.source_url = cand.source_url;
  for (const auto& d : cand.stage_history) inst.provenance[std::string(stage_name(d.stage))] = "pass";
  return inst;
}

}  // namespace how2::mine

#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "how2/corpus/records.hpp"
#include "how2/mine/heuristics.hpp"

namespace how2::gateway {
class ModelGateway;
}
namespace how2::util {
class PromptLibrary;
}

namespace how2::mine {

enum class Stage { extraction, heuristics, llm_filter, postprocess, final_validation };

inline constexpr std::size_t kStageCount = 5;
inline constexpr std::array<Stage, kStageCount> kStages = {Stage::extraction, Stage::heuristics, Stage::llm_filter,
                                                          Stage::postprocess, Stage::final_validation};

/// "extraction", "heuristics", "llm_filter", "postprocess", "final".
std::string_view stage_name(Stage stage) noexcept;

struct StageDecision {
  Stage stage = Stage::extraction;
  bool pass = false;
  std::string reason;

  bool operator==(const StageDecision&) const = default;
};

struct CandidateProcedure {
  std::string document_id;
  corpus::Topic topic = corpus::Topic::art_design;
  std::string source_url;
  std::string goal;
  std::vector<std::string> steps;
  std::vector<std::string> resources;
  std::vector<StageDecision> stage_history;  // append-only, in stage order

  void record(Stage stage, bool pass, std::string reason = {});
};

struct StageCounts {
  std::size_t input_count = 0;
  std::size_t retained_count = 0;
  std::size_t rejected_count = 0;
  std::map<std::string, std::size_t> reject_reasons;

  bool operator==(const StageCounts&) const = default;
};

class StageYieldReport {
 public:
  void retain(Stage stage);
  void reject(Stage stage, const std::string& reason);

  /// Adds another report's counts; associative and commutative.
  void merge(const StageYieldReport& other);

  const StageCounts& at(Stage stage) const { return stages_[static_cast<std::size_t>(stage)]; }

  /// input = retained + rejected and reasons sum to rejected at every stage,
  /// and each stage's input equals the previous stage's retained count.
  bool telescopes() const;

  nlohmann::ordered_json to_json() const;
  static StageYieldReport from_json(const nlohmann::json& j);

  bool operator==(const StageYieldReport&) const = default;

 private:
  std::array<StageCounts, kStageCount> stages_{};
};

// Parsed model replies. Each parser throws ParseError when the reply does not
// follow the grammar its prompt template asks for.
struct ExtractionReply {
  bool no_procedure = false;
  std::string goal;
  std::vector<std::string> steps;
};
ExtractionReply parse_extraction_reply(std::string_view reply);

inline constexpr std::array<std::string_view, 6> kFilterCategories = {
    "named_entity", "pure_math", "ui_interaction", "creative", "non_sequential", "unreasonable"};

/// Returns the rejection category, or "none" for PASS.
std::string parse_filter_reply(std::string_view reply);

struct RewriteReply {
  std::string goal;
  std::optional<std::vector<std::string>> steps;  // absent: keep the original steps
};
RewriteReply parse_rewrite_reply(std::string_view reply);

/// Never fails: an empty or "none" reply yields no resources.
std::vector<std::string> parse_resources_reply(std::string_view reply);

/// True for VALID, false for INVALID.
bool parse_final_reply(std::string_view reply);

struct PipelineConfig {
  HeuristicsConfig heuristics;
  // Parallel documents; 0 means the gateway's max_in_flight.
  std::size_t max_workers = 0;
};

struct ExtractOutcome {
  std::optional<CandidateProcedure> candidate;
  std::string reason;  // set when candidate is empty
};

struct PipelineResult {
  std::vector<corpus::ProcedureInstance> instances;  // in document order
  StageYieldReport report;
  std::vector<CandidateProcedure> rejected;          // with their stage history
};

class MinePipeline {
 public:
  MinePipeline(gateway::ModelGateway& gateway, const util::PromptLibrary& prompts, PipelineConfig config = {});

  ExtractOutcome extract_procedure(const corpus::SourceDocument& doc) const;
  FilterDecision llm_filter(const CandidateProcedure& cand) const;
  /// Rewrites goal (and steps when the reply renumbers them) and extracts
  /// resources. Re-applies the step-count bounds to a rewritten list.
  FilterDecision postprocess(CandidateProcedure& cand) const;
  FilterDecision final_validate(const CandidateProcedure& cand) const;

  /// Runs all five stages on one document, recording every decision.
  CandidateProcedure process(const corpus::SourceDocument& doc) const;

  PipelineResult run(const std::vector<corpus::SourceDocument>& docs) const;

  const PipelineConfig& config() const noexcept { return config_; }

 private:
  gateway::ModelGateway& gateway_;
  const util::PromptLibrary& prompts_;
  PipelineConfig config_;
};

/// A candidate that passed every stage, with "pass" provenance for each.
corpus::ProcedureInstance to_instance(const CandidateProcedure& cand);

bool passed_all_stages(const CandidateProcedure& cand);

}  // namespace how2::mine

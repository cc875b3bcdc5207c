#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "how2/corpus/topic.hpp"

namespace how2::corpus {

struct SourceDocument {
  std::string id;
  std::string url;
  Topic topic = Topic::art_design;
  std::string body;
};

// A mined procedure: goal g, resources R, reference steps S*.
struct ProcedureInstance {
  std::string id;
  Topic topic = Topic::art_design;
  std::string goal;
  std::vector<std::string> resources;
  std::vector<std::string> steps;
  std::string source_url;
  // stage name -> "pass" / "fail"
  std::map<std::string, std::string> provenance;

  bool operator==(const ProcedureInstance&) const = default;
};

enum class PromptVariant { base, instruct, reasoning };

std::string_view to_string(PromptVariant variant) noexcept;
PromptVariant parse_prompt_variant(std::string_view text);

struct GenerationRecord {
  std::string instance_id;
  std::string model_id;
  PromptVariant prompt_variant = PromptVariant::instruct;
  std::string raw_text;
  std::vector<std::string> steps;
  std::int64_t gen_tokens = 0;
  std::int64_t ref_tokens = 0;
  // Set when the gateway failed for this instance; the run continues.
  bool failed = false;
  std::string error;

  std::string generation_id() const { return model_id + "/" + instance_id; }

  bool operator==(const GenerationRecord&) const = default;
};

// Step references are 1-based.
struct CriticalFailure {
  std::string description;
  std::vector<int> reference_step_refs;
  std::vector<int> generated_step_refs;

  bool operator==(const CriticalFailure&) const = default;
};

enum class Verdict { has_failure, no_failure };

std::string_view to_string(Verdict verdict) noexcept;
Verdict parse_verdict(std::string_view text);

/// has_failure exactly when at least one failure was enumerated.
inline Verdict verdict_of(const std::vector<CriticalFailure>& failures) noexcept {
  return failures.empty() ? Verdict::no_failure : Verdict::has_failure;
}

struct JudgmentRecord {
  std::string instance_id;
  std::string generation_id;
  std::string judge_id;
  Topic topic = Topic::art_design;
  std::vector<CriticalFailure> failures;
  // An unparseable judge reply produces valid == false; such records are
  // excluded from aggregation and counted separately.
  bool valid = true;
  std::string error;

  Verdict binary() const noexcept { return verdict_of(failures); }

  bool operator==(const JudgmentRecord&) const = default;
};

struct AnnotationRecord {
  std::string annotator_id;
  std::string instance_id;
  std::string generation_id;
  std::string task_id;
  std::vector<CriticalFailure> failures;
  double elapsed_seconds = 0.0;
  bool attention_complete = false;

  Verdict binary() const noexcept { return verdict_of(failures); }

  bool operator==(const AnnotationRecord&) const = default;
};

}  // namespace how2::corpus

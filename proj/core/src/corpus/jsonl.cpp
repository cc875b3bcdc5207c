#include "how2/corpus/jsonl.hpp"

#include <fstream>

#include "how2/util/error.hpp"

namespace how2::corpus {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const json& field(const json& j, const char* name) {
  if (!j.is_object()) throw ParseError("record is not a JSON object");
  const auto it = j.find(name);
  if (it == j.end()) throw ParseError(std::string("missing field '") + name + "'");
  return *it;
}

std::string string_field(const json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_string()) throw ParseError(std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

std::string optional_string(const json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_string()) throw ParseError(std::string("field '") + name + "' must be a string");
  return it->get<std::string>();
}

std::vector<std::string> string_list(const json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_array()) throw ParseError(std::string("field '") + name + "' must be an array");
  std::vector<std::string> out;
  out.reserve(v.size());
  for (const auto& item : v) {
    if (!item.is_string()) {
      throw ParseError(std::string("field '") + name + "' must contain only strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::vector<int> index_list(const json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_array()) throw ParseError(std::string("field '") + name + "' must be an array");
  std::vector<int> out;
  for (const auto& item : *it) {
    if (!item.is_number_integer()) {
      throw ParseError(std::string("field '") + name + "' must contain integers");
    }
    out.push_back(item.get<int>());
  }
  return out;
}

std::int64_t count_field(const json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_number_integer()) throw ParseError(std::string("field '") + name + "' must be an integer");
  const auto n = v.get<std::int64_t>();
  if (n < 0) throw ParseError(std::string("field '") + name + "' must be >= 0");
  return n;
}

bool bool_field(const json& j, const char* name, bool fallback) {
  const auto it = j.find(name);
  if (it == j.end()) return fallback;
  if (!it->is_boolean()) throw ParseError(std::string("field '") + name + "' must be a boolean");
  return it->get<bool>();
}

Topic topic_field(const json& j) { return parse_topic(string_field(j, "topic")); }

json parse_line(std::string_view line) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON record: ") + e.what());
  }
}

void check_binary(const json& j, const std::vector<CriticalFailure>& failures) {
  const auto it = j.find("binary");
  if (it == j.end() || it->is_null()) return;
  if (!it->is_string()) throw ParseError("field 'binary' must be a string");
  if (parse_verdict(it->get<std::string>()) != verdict_of(failures)) {
    throw ParseError("field 'binary' disagrees with 'failures'");
  }
}

}  // namespace

std::string_view to_string(PromptVariant variant) noexcept {
  switch (variant) {
    case PromptVariant::base: return "base";
    case PromptVariant::instruct: return "instruct";
    case PromptVariant::reasoning: return "reasoning";
  }
  return "instruct";
}

PromptVariant parse_prompt_variant(std::string_view text) {
  if (text == "base") return PromptVariant::base;
  if (text == "instruct") return PromptVariant::instruct;
  if (text == "reasoning") return PromptVariant::reasoning;
  throw DomainError("unknown prompt variant '" + std::string(text) + "'");
}

std::string_view to_string(Verdict verdict) noexcept {
  return verdict == Verdict::has_failure ? "has_failure" : "no_failure";
}

Verdict parse_verdict(std::string_view text) {
  if (text == "has_failure") return Verdict::has_failure;
  if (text == "no_failure") return Verdict::no_failure;
  throw ParseError("unknown verdict '" + std::string(text) + "'");
}

ordered_json to_json(const SourceDocument& doc) {
  ordered_json j;
  j["id"] = doc.id;
  j["url"] = doc.url;
  j["topic"] = topic_name(doc.topic);
  j["body"] = doc.body;
  return j;
}

ordered_json to_json(const ProcedureInstance& inst) {
  ordered_json j;
  j["id"] = inst.id;
  j["topic"] = topic_name(inst.topic);
  j["goal"] = inst.goal;
  j["resources"] = inst.resources;
  j["steps"] = inst.steps;
  j["source_url"] = inst.source_url;
  j["provenance"] = ordered_json::object();
  for (const auto& [stage, outcome] : inst.provenance) j["provenance"][stage] = outcome;
  return j;
}

ordered_json to_json(const GenerationRecord& gen) {
  ordered_json j;
  j["instance_id"] = gen.instance_id;
  j["model_id"] = gen.model_id;
  j["prompt_variant"] = to_string(gen.prompt_variant);
  j["raw_text"] = gen.raw_text;
  j["steps"] = gen.steps;
  j["gen_tokens"] = gen.gen_tokens;
  j["ref_tokens"] = gen.ref_tokens;
  if (gen.failed) {
    j["failed"] = true;
    j["error"] = gen.error;
  }
  return j;
}

ordered_json to_json(const CriticalFailure& failure) {
  ordered_json j;
  j["description"] = failure.description;
  j["reference_step_refs"] = failure.reference_step_refs;
  j["generated_step_refs"] = failure.generated_step_refs;
  return j;
}

namespace {
ordered_json failures_json(const std::vector<CriticalFailure>& failures) {
  ordered_json arr = ordered_json::array();
  for (const auto& f : failures) arr.push_back(to_json(f));
  return arr;
}
}  // namespace

ordered_json to_json(const JudgmentRecord& judgment) {
  ordered_json j;
  j["instance_id"] = judgment.instance_id;
  j["generation_id"] = judgment.generation_id;
  j["judge_id"] = judgment.judge_id;
  j["topic"] = topic_name(judgment.topic);
  j["failures"] = failures_json(judgment.failures);
  j["binary"] = to_string(judgment.binary());
  if (!judgment.valid) {
    j["valid"] = false;
    j["error"] = judgment.error;
  }
  return j;
}

ordered_json to_json(const AnnotationRecord& annotation) {
  ordered_json j;
  j["annotator_id"] = annotation.annotator_id;
  j["instance_id"] = annotation.instance_id;
  j["generation_id"] = annotation.generation_id;
  j["task_id"] = annotation.task_id;
  j["failures"] = failures_json(annotation.failures);
  j["binary"] = to_string(annotation.binary());
  j["elapsed_seconds"] = annotation.elapsed_seconds;
  j["attention_complete"] = annotation.attention_complete;
  return j;
}

SourceDocument document_from_json(const json& j) {
  SourceDocument doc;
  doc.id = string_field(j, "id");
  doc.url = optional_string(j, "url");
  doc.topic = topic_field(j);
  doc.body = string_field(j, "body");
  if (doc.body.empty()) throw ParseError("field 'body' must be non-empty");
  return doc;
}

ProcedureInstance instance_from_json(const json& j) {
  ProcedureInstance inst;
  inst.id = string_field(j, "id");
  inst.topic = topic_field(j);
  inst.goal = string_field(j, "goal");
  if (inst.goal.empty()) throw ParseError("field 'goal' must be non-empty");
  inst.resources = string_list(j, "resources");
  inst.steps = string_list(j, "steps");
  if (inst.steps.empty()) throw ParseError("field 'steps' must be non-empty");
  inst.source_url = optional_string(j, "source_url");
  if (const auto it = j.find("provenance"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw ParseError("field 'provenance' must be an object");
    for (const auto& [stage, outcome] : it->items()) {
      if (!outcome.is_string()) throw ParseError("field 'provenance' values must be strings");
      inst.provenance[stage] = outcome.get<std::string>();
    }
  }
  return inst;
}

GenerationRecord generation_from_json(const json& j) {
  GenerationRecord gen;
  gen.instance_id = string_field(j, "instance_id");
  gen.model_id = string_field(j, "model_id");
  gen.prompt_variant = parse_prompt_variant(string_field(j, "prompt_variant"));
  gen.raw_text = string_field(j, "raw_text");
  gen.steps = string_list(j, "steps");
  gen.gen_tokens = count_field(j, "gen_tokens");
  gen.ref_tokens = count_field(j, "ref_tokens");
  gen.failed = bool_field(j, "failed", false);
  gen.error = optional_string(j, "error");
  return gen;
}

CriticalFailure failure_from_json(const json& j) {
  CriticalFailure f;
  f.description = string_field(j, "description");
  f.reference_step_refs = index_list(j, "reference_step_refs");
  f.generated_step_refs = index_list(j, "generated_step_refs");
  return f;
}

std::vector<CriticalFailure> failures_from_json(const json& j) {
  if (!j.is_array()) throw ParseError("field 'failures' must be an array");
  std::vector<CriticalFailure> out;
  for (const auto& item : j) out.push_back(failure_from_json(item));
  return out;
}

JudgmentRecord judgment_from_json(const json& j) {
  JudgmentRecord rec;
  rec.instance_id = string_field(j, "instance_id");
  rec.generation_id = string_field(j, "generation_id");
  rec.judge_id = string_field(j, "judge_id");
  rec.topic = topic_field(j);
  rec.failures = failures_from_json(field(j, "failures"));
  rec.valid = bool_field(j, "valid", true);
  rec.error = optional_string(j, "error");
  if (rec.valid) check_binary(j, rec.failures);
  return rec;
}

AnnotationRecord annotation_from_json(const json& j) {
  AnnotationRecord rec;
  rec.annotator_id = string_field(j, "annotator_id");
  rec.instance_id = string_field(j, "instance_id");
  rec.generation_id = optional_string(j, "generation_id");
  rec.task_id = optional_string(j, "task_id");
  rec.failures = failures_from_json(field(j, "failures"));
  check_binary(j, rec.failures);
  const auto& elapsed = field(j, "elapsed_seconds");
  if (!elapsed.is_number()) throw ParseError("field 'elapsed_seconds' must be a number");
  rec.elapsed_seconds = elapsed.get<double>();
  rec.attention_complete = bool_field(j, "attention_complete", false);
  return rec;
}

SourceDocument parse_document(std::string_view line) { return document_from_json(parse_line(line)); }
ProcedureInstance parse_instance(std::string_view line) { return instance_from_json(parse_line(line)); }
GenerationRecord parse_generation(std::string_view line) { return generation_from_json(parse_line(line)); }
JudgmentRecord parse_judgment(std::string_view line) { return judgment_from_json(parse_line(line)); }
AnnotationRecord parse_annotation(std::string_view line) { return annotation_from_json(parse_line(line)); }

std::string dump_line(const ordered_json& j) {
  return j.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
}

void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::string_view line)>& on_line) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      on_line(line);
    } catch (const Error& e) {
      throw_error(e.category(), path.filename().string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& line : lines) out << line << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace how2::corpus

#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "how2/corpus/records.hpp"

namespace how2::corpus {

// Line-delimited interchange. Every record serializes to exactly one line of
// UTF-8 JSON with lower_snake_case field names in declaration order; text
// containing newlines is carried as JSON escapes inside that line.

nlohmann::ordered_json to_json(const SourceDocument& doc);
nlohmann::ordered_json to_json(const ProcedureInstance& inst);
nlohmann::ordered_json to_json(const GenerationRecord& gen);
nlohmann::ordered_json to_json(const CriticalFailure& failure);
nlohmann::ordered_json to_json(const JudgmentRecord& judgment);
nlohmann::ordered_json to_json(const AnnotationRecord& annotation);

SourceDocument document_from_json(const nlohmann::json& j);
ProcedureInstance instance_from_json(const nlohmann::json& j);
GenerationRecord generation_from_json(const nlohmann::json& j);
CriticalFailure failure_from_json(const nlohmann::json& j);
std::vector<CriticalFailure> failures_from_json(const nlohmann::json& j);
JudgmentRecord judgment_from_json(const nlohmann::json& j);
AnnotationRecord annotation_from_json(const nlohmann::json& j);

/// Parses one record line. Malformed input raises ParseError naming the
/// offending field; an unknown topic raises DomainError.
SourceDocument parse_document(std::string_view line);
ProcedureInstance parse_instance(std::string_view line);
GenerationRecord parse_generation(std::string_view line);
JudgmentRecord parse_judgment(std::string_view line);
AnnotationRecord parse_annotation(std::string_view line);

std::string dump_line(const nlohmann::ordered_json& j);

template <typename Record>
std::string serialize(const Record& record) {
  return dump_line(to_json(record));
}

/// Calls `on_line` for every non-blank line; parse errors are re-raised with
/// the file name and 1-based line number prefixed.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::string_view line)>& on_line);

template <typename Record, typename Parser>
std::vector<Record> read_jsonl(const std::filesystem::path& path, Parser parse) {
  std::vector<Record> out;
  for_each_line(path, [&](std::string_view line) { out.push_back(parse(line)); });
  return out;
}

inline std::vector<ProcedureInstance> read_instances(const std::filesystem::path& path) {
  return read_jsonl<ProcedureInstance>(path, parse_instance);
}
inline std::vector<SourceDocument> read_documents(const std::filesystem::path& path) {
  return read_jsonl<SourceDocument>(path, parse_document);
}
inline std::vector<GenerationRecord> read_generations(const std::filesystem::path& path) {
  return read_jsonl<GenerationRecord>(path, parse_generation);
}
inline std::vector<JudgmentRecord> read_judgments(const std::filesystem::path& path) {
  return read_jsonl<JudgmentRecord>(path, parse_judgment);
}
inline std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path) {
  return read_jsonl<AnnotationRecord>(path, parse_annotation);
}

/// Writes records one per line to a fresh file (truncating).
template <typename Record>
void write_jsonl(const std::filesystem::path& path, const std::vector<Record>& records);

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

template <typename Record>
void write_jsonl(const std::filesystem::path& path, const std::vector<Record>& records) {
  std::vector<std::string> lines;
  lines.reserve(records.size());
  for (const auto& r : records) lines.push_back(serialize(r));
  write_lines(path, lines);
}

}  // namespace how2::corpus

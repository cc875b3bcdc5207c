#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "how2/corpus/records.hpp"
#include "how2/util/http_host.hpp"

namespace how2::annotation {

// One (instance, generation) pair awaiting human labels.
struct PoolItem {
  corpus::ProcedureInstance instance;
  corpus::GenerationRecord generation;
  bool prescreened = true;  // carried through; not acted on
};

/// Pool line: {"instance": {...}, "generation": {...}, "prescreened": bool?}.
PoolItem parse_pool_item(std::string_view line);
std::vector<PoolItem> read_pool(const std::filesystem::path& path);
std::string serialize_pool_item(const PoolItem& item);

struct AttentionToken {
  std::string element;  // "goal" or "step"
  int index = 0;        // 1-based generated step, 0 for the goal
  std::string token;
};

struct AnnotationTask {
  std::string task_id;
  std::size_t pool_index = 0;
  std::string annotator_id;
  std::vector<AttentionToken> attention_tokens;
  std::set<std::string> acknowledged;
  double issued_at = 0.0;
  bool submitted = false;
};

struct Submission {
  std::string task_id;
  corpus::Verdict verdict = corpus::Verdict::no_failure;
  std::vector<corpus::CriticalFailure> failures;
  double client_elapsed_seconds = 0.0;
};

/// Parses the submit payload; refs are kept as given and checked on submit.
Submission parse_submission(const nlohmann::json& j);

struct SubmitResult {
  bool accepted = false;
  std::string reason;  // too_fast, attention_incomplete, bad_reference, inconsistent_verdict, already_submitted
  std::optional<corpus::AnnotationRecord> record;
};

struct ServiceConfig {
  std::size_t annotators_per_item = 3;
  double lock_seconds = 90.0;
  std::filesystem::path store_path;  // empty: in-memory only
  std::string admin_token;           // empty: export disabled over HTTP
  std::function<double()> clock;     // seconds; defaults to a steady clock
  std::optional<std::uint64_t> token_seed;  // deterministic tokens for tests
};

// Append-only record store; each accepted line is fsync'ed before the
// submit call returns.
class AnnotationStore {
 public:
  explicit AnnotationStore(std::filesystem::path path);
  ~AnnotationStore();

  AnnotationStore(const AnnotationStore&) = delete;
  AnnotationStore& operator=(const AnnotationStore&) = delete;

  void append(const std::string& line);
  /// Lines previously written to the file (empty without a path).
  const std::vector<std::string>& lines() const noexcept { return lines_; }

 private:
  std::filesystem::path path_;
  int fd_ = -1;
  std::vector<std::string> lines_;
};

class AnnotationService {
 public:
  AnnotationService(std::vector<PoolItem> pool, ServiceConfig config);

  std::string open_session(const std::string& annotator_id);
  /// Annotator bound to a session token, if any.
  std::optional<std::string> session_annotator(const std::string& session_token) const;

  /// The annotator's open task if one exists, otherwise a new assignment;
  /// nullopt when nothing is left for this annotator.
  std::optional<AnnotationTask> fetch_task(const std::string& annotator_id);

  /// Idempotent. Throws ValidationError for an unknown task or a token that
  /// does not belong to it.
  AnnotationTask record_attention(const std::string& annotator_id, const std::string& task_id,
                                  const std::string& token);

  SubmitResult submit(const std::string& annotator_id, const Submission& submission);

  /// One AnnotationRecord line per accepted submission, in acceptance order.
  std::vector<std::string> export_lines() const;

  nlohmann::ordered_json task_json(const AnnotationTask& task) const;

  util::HttpReply handle(const util::HttpRequest& request);

  const std::vector<PoolItem>& pool() const noexcept { return pool_; }

 private:
  std::string random_hex();
  std::optional<std::string> authorize(const util::HttpRequest& request) const;

  std::vector<PoolItem> pool_;
  ServiceConfig config_;
  mutable std::mutex mu_;
  std::mt19937_64 rng_;
  std::map<std::string, std::string> sessions_;           // token -> annotator
  std::map<std::string, AnnotationTask> tasks_;           // task_id -> task
  std::map<std::string, std::string> open_task_;          // annotator -> task_id
  std::vector<std::size_t> slots_taken_;                  // per pool item
  std::set<std::pair<std::string, std::size_t>> assigned_;  // (annotator, pool index)
  std::size_t next_task_ = 1;
  std::unique_ptr<AnnotationStore> store_;
  std::vector<std::string> accepted_;
};

}  // namespace how2::annotation

#include "how2/annotation/service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <chrono>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "how2/corpus/jsonl.hpp"
#include "how2/util/error.hpp"
#include "how2/util/text.hpp"

namespace how2::annotation {

using nlohmann::json;
using util::HttpReply;

PoolItem parse_pool_item(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("pool line is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("instance") || !j.contains("generation")) {
    throw ParseError("pool line needs 'instance' and 'generation'");
  }
  PoolItem item;
  item.instance = corpus::instance_from_json(j.at("instance"));
  item.generation = corpus::generation_from_json(j.at("generation"));
  if (item.generation.instance_id != item.instance.id) {
    throw ParseError("pool generation refers to '" + item.generation.instance_id + "', not '" + item.instance.id + "'");
  }
  if (const auto it = j.find("prescreened"); it != j.end()) {
    if (!it->is_boolean()) throw ParseError("field 'prescreened' must be a boolean");
    item.prescreened = it->get<bool>();
  }
  return item;
}

std::vector<PoolItem> read_pool(const std::filesystem::path& path) {
  std::vector<PoolItem> out;
  corpus::for_each_line(path, [&](std::string_view line) { out.push_back(parse_pool_item(line)); });
  return out;
}

std::string serialize_pool_item(const PoolItem& item) {
  nlohmann::ordered_json j;
  j["instance"] = corpus::to_json(item.instance);
  j["generation"] = corpus::to_json(item.generation);
  j["prescreened"] = item.prescreened;
  return corpus::dump_line(j);
}

Submission parse_submission(const json& j) {
  if (!j.is_object()) throw ParseError("submission must be an object");
  Submission s;
  try {
    s.task_id = j.at("task_id").get<std::string>();
    s.verdict = corpus::parse_verdict(j.at("verdict").get<std::string>());
    s.client_elapsed_seconds = j.value("client_elapsed_seconds", 0.0);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed submission: ") + e.what());
  }
  if (const auto it = j.find("failures"); it != j.end() && !it->is_null()) s.failures = corpus::failures_from_json(*it);
  return s;
}

AnnotationStore::AnnotationStore(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.empty()) return;
  if (std::filesystem::exists(path_)) {
    corpus::for_each_line(path_, [&](std::string_view line) {
      (void)corpus::parse_annotation(line);
      lines_.emplace_back(line);
    });
  } else if (path_.has_parent_path()) {
    std::filesystem::create_directories(path_.parent_path());
  }
  fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw IoError("cannot open annotation store " + path_.string() + ": " + std::strerror(errno));
}

AnnotationStore::~AnnotationStore() {
  if (fd_ >= 0) ::close(fd_);
}

void AnnotationStore::append(const std::string& line) {
  if (fd_ >= 0) {
    const std::string data = line + "\n";
    std::size_t off = 0;
    while (off < data.size()) {
      const auto n = ::write(fd_, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw IoError("annotation store write failed: " + std::string(std::strerror(errno)));
      }
      off += static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) throw IoError("annotation store fsync failed: " + std::string(std::strerror(errno)));
  }
  lines_.push_back(line);
}

AnnotationService::AnnotationService(std::vector<PoolItem> pool, ServiceConfig config)
    : pool_(std::move(pool)), config_(std::move(config)) {
  if (config_.annotators_per_item < 1) throw ConfigError("annotators_per_item must be >= 1");
  if (!config_.clock) {
    const auto start = std::chrono::steady_clock::now();
    config_.clock = [start] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
  }
  rng_.seed(config_.token_seed ? *config_.token_seed : std::random_device{}());
  slots_taken_.assign(pool_.size(), 0);
  store_ = std::make_unique<AnnotationStore>(config_.store_path);

  // Replay earlier accepts so a restart neither loses nor repeats assignments.
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  for (std::size_t i = 0; i < pool_.size(); ++i) {
    index.emplace(std::make_pair(pool_[i].instance.id, pool_[i].generation.generation_id()), i);
  }
  for (const auto& line : store_->lines()) {
    const auto rec = corpus::parse_annotation(line);
    accepted_.push_back(line);
    const auto it = index.find({rec.instance_id, rec.generation_id});
    if (it != index.end() && assigned_.emplace(rec.annotator_id, it->second).second) ++slots_taken_[it->second];
    // Resume numbering after the highest stored id; unsubmitted ids may lie in between.
    if (rec.task_id.starts_with("task-")) {
      std::size_t n = 0;
      const auto* first = rec.task_id.data() + 5;
      const auto* last = rec.task_id.data() + rec.task_id.size();
      if (std::from_chars(first, last, n).ptr == last) next_task_ = std::max(next_task_, n + 1);
    }
  }
}

std::string AnnotationService::random_hex() { return fmt::format("{:016x}", rng_()); }

std::string AnnotationService::open_session(const std::string& annotator_id) {
  if (util::trim(annotator_id).empty()) throw ValidationError("annotator_id must be non-empty");
  std::lock_guard lock(mu_);
  auto token = random_hex() + random_hex();
  sessions_[token] = annotator_id;
  return token;
}

std::optional<std::string> AnnotationService::session_annotator(const std::string& session_token) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(session_token);
  if (it == sessions_.end()) return std::nullopt;
  return it->second;
}

std::optional<AnnotationTask> AnnotationService::fetch_task(const std::string& annotator_id) {
  std::lock_guard lock(mu_);
  if (const auto open = open_task_.find(annotator_id); open != open_task_.end()) return tasks_.at(open->second);
  for (std::size_t i = 0; i < pool_.size(); ++i) {
    if (slots_taken_[i] >= config_.annotators_per_item) continue;
    if (assigned_.count({annotator_id, i})) continue;

    AnnotationTask task;
    task.task_id = fmt::format("task-{:06d}", next_task_++);
    task.pool_index = i;
    task.annotator_id = annotator_id;
    task.issued_at = config_.clock();
    std::set<std::string> used;
    auto fresh = [&] {
      std::string t;
      do {
        t = random_hex();
      } while (!used.insert(t).second);
      return t;
    };
    task.attention_tokens.push_back(AttentionToken{"goal", 0, fresh()});
    for (std::size_t s = 0; s < pool_[i].generation.steps.size(); ++s) {
      task.attention_tokens.push_back(AttentionToken{"step", static_cast<int>(s + 1), fresh()});
    }
    assigned_.emplace(annotator_id, i);
    ++slots_taken_[i];
    open_task_[annotator_id] = task.task_id;
    tasks_[task.task_id] = task;
    return task;
  }
  return std::nullopt;
}

AnnotationTask AnnotationService::record_attention(const std::string& annotator_id, const std::string& task_id,
                                                   const std::string& token) {
  std::lock_guard lock(mu_);
  const auto it = tasks_.find(task_id);
  if (it == tasks_.end() || it->second.annotator_id != annotator_id) {
    throw ValidationError("unknown task '" + task_id + "'");
  }
  auto& task = it->second;
  const bool known = std::any_of(task.attention_tokens.begin(), task.attention_tokens.end(),
                                 [&](const AttentionToken& t) { return t.token == token; });
  if (!known) throw ValidationError("token does not belong to task '" + task_id + "'");
  task.acknowledged.insert(token);
  return task;
}

namespace {

bool refs_in_range(const std::vector<int>& refs, std::size_t limit) {
  return std::all_of(refs.begin(), refs.end(),
                     [&](int k) { return k >= 1 && static_cast<std::size_t>(k) <= limit; });
}

}  // namespace

SubmitResult AnnotationService::submit(const std::string& annotator_id, const Submission& submission) {
  std::lock_guard lock(mu_);
  const auto it = tasks_.find(submission.task_id);
  if (it == tasks_.end() || it->second.annotator_id != annotator_id) {
    throw ValidationError("unknown task '" + submission.task_id + "'");
  }
  auto& task = it->second;
  SubmitResult result;
  auto reject = [&](std::string why) {
    result.reason = std::move(why);
    return result;
  };
  if (task.submitted) return reject("already_submitted");

  const double elapsed = config_.clock() - task.issued_at;
  if (elapsed < config_.lock_seconds) return reject("too_fast");
  if (task.acknowledged.size() != task.attention_tokens.size()) return reject("attention_incomplete");

  const auto& item = pool_[task.pool_index];
  for (const auto& f : submission.failures) {
    if (util::trim(f.description).empty()) return reject("bad_reference");
    if (!refs_in_range(f.reference_step_refs, item.instance.steps.size())) return reject("bad_reference");
    if (!refs_in_range(f.generated_step_refs, item.generation.steps.size())) return reject("bad_reference");
  }
  if (corpus::verdict_of(submission.failures) != submission.verdict) return reject("inconsistent_verdict");

  corpus::AnnotationRecord rec;
  rec.annotator_id = annotator_id;
  rec.instance_id = item.instance.id;
  rec.generation_id = item.generation.generation_id();
  rec.task_id = task.task_id;
  rec.failures = submission.failures;
  rec.elapsed_seconds = elapsed;
  rec.attention_complete = true;

  const auto line = corpus::serialize(rec);
  store_->append(line);
  accepted_.push_back(line);
  task.submitted = true;
  open_task_.erase(annotator_id);

  result.accepted = true;
  result.record = std::move(rec);
  return result;
}

std::vector<std::string> AnnotationService::export_lines() const {
  std::lock_guard lock(mu_);
  return accepted_;
}

nlohmann::ordered_json AnnotationService::task_json(const AnnotationTask& task) const {
  const auto& item = pool_[task.pool_index];
  nlohmann::ordered_json tokens = nlohmann::ordered_json::array();
  for (const auto& t : task.attention_tokens) {
    tokens.push_back({{"element", t.element}, {"index", t.index}, {"token", t.token}});
  }
  return {{"task_id", task.task_id},
          {"instance",
           {{"id", item.instance.id},
            {"topic", corpus::topic_name(item.instance.topic)},
            {"goal", item.instance.goal},
            {"resources", item.instance.resources},
            {"reference_steps", item.instance.steps}}},
          {"generation_id", item.generation.generation_id()},
          {"generation_steps", item.generation.steps},
          {"attention_tokens", std::move(tokens)},
          {"acknowledged", std::vector<std::string>(task.acknowledged.begin(), task.acknowledged.end())},
          {"issued_at", task.issued_at},
          {"lock_seconds", config_.lock_seconds}};
}

std::optional<std::string> AnnotationService::authorize(const util::HttpRequest& request) const {
  auto auth = request.header("authorization");
  if (!auth.starts_with("Bearer ")) return std::nullopt;
  return session_annotator(auth.substr(7));
}

namespace {

json parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("request body is not JSON: ") + e.what());
  }
}

std::string require_string(const json& j, const char* field) {
  const auto it = j.find(field);
  if (it == j.end() || !it->is_string()) throw ParseError(std::string("missing string field '") + field + "'");
  return it->get<std::string>();
}

}  // namespace

HttpReply AnnotationService::handle(const util::HttpRequest& request) {
  try {
    const auto& path = request.path;
    if (path == "/healthz" && request.method == "GET") return HttpReply::json(200, {{"status", "ok"}});

    if (path == "/v1/session" && request.method == "POST") {
      const auto body = parse_body(request.body);
      const auto annotator = require_string(body, "annotator_id");
      return HttpReply::json(200, {{"annotator_id", annotator}, {"session_token", open_session(annotator)}});
    }

    if (path == "/v1/export" && request.method == "GET") {
      if (config_.admin_token.empty() || request.header("authorization") != "Bearer " + config_.admin_token) {
        return HttpReply::error(403, "validation", "export requires the admin token");
      }
      std::string out;
      for (const auto& line : export_lines()) out += line + "\n";
      return HttpReply{200, out, "application/x-ndjson"};
    }

    if (path != "/v1/task" && path != "/v1/attention" && path != "/v1/submit") {
      return HttpReply::error(404, "validation", "no route " + path);
    }
    const auto annotator = authorize(request);
    if (!annotator) return HttpReply::error(401, "validation", "missing or unknown session token");

    if (path == "/v1/task" && request.method == "GET") {
      const auto task = fetch_task(*annotator);
      if (!task) return HttpReply{204, "", "application/json"};
      return HttpReply::json(200, task_json(*task));
    }
    if (path == "/v1/attention" && request.method == "POST") {
      const auto body = parse_body(request.body);
      const auto task = record_attention(*annotator, require_string(body, "task_id"), require_string(body, "token"));
      return HttpReply::json(200, {{"acknowledged", true},
                                   {"acknowledged_count", task.acknowledged.size()},
                                   {"total", task.attention_tokens.size()}});
    }
    if (path == "/v1/submit" && request.method == "POST") {
      const auto result = submit(*annotator, parse_submission(parse_body(request.body)));
      if (!result.accepted) return HttpReply::json(422, {{"status", "rejected"}, {"reason", result.reason}});
      return HttpReply::json(200, {{"status", "accepted"}, {"record", corpus::to_json(*result.record)}});
    }
    return HttpReply::error(405, "validation", "method not allowed");
  } catch (const Error& e) {
    const int status = e.category() == ErrorCategory::io ? 500 : 400;
    return HttpReply::error(status, to_string(e.category()), e.what());
  }
}

}  // namespace how2::annotation

#include <gtest/gtest.h>

#include <set>

#include "fixtures.hpp"
#include "how2/annotation/service.hpp"
#include "how2/corpus/jsonl.hpp"
#include "how2/gateway/gateway.hpp"
#include "how2/util/error.hpp"

namespace {

using namespace how2;
using annotation::AnnotationService;
using annotation::Submission;
using corpus::Topic;

std::vector<annotation::PoolItem> make_pool(std::size_t n) {
  std::vector<annotation::PoolItem> pool;
  for (std::size_t i = 0; i < n; ++i) {
    auto inst = test::make_instance("item-" + std::to_string(i), Topic::food_dining, 4);
    auto gen = test::make_generation(inst, "m", {"A.", "B.", "C."});
    pool.push_back({inst, gen, i % 2 == 0});
  }
  return pool;
}

class AnnotationTest : public ::testing::Test {
 protected:
  annotation::ServiceConfig config(const std::filesystem::path& store = {}) {
    annotation::ServiceConfig cfg;
    cfg.store_path = store;
    cfg.admin_token = "admin";
    cfg.clock = [this] { return now_; };
    cfg.token_seed = 7;
    return cfg;
  }

  // Acknowledges every token, waits out the lock and submits.
  annotation::SubmitResult complete(AnnotationService& svc, const std::string& who, corpus::Verdict verdict,
                                    std::vector<corpus::CriticalFailure> failures = {}) {
    const auto task = svc.fetch_task(who);
    EXPECT_TRUE(task.has_value());
    for (const auto& t : task->attention_tokens) svc.record_attention(who, task->task_id, t.token);
    now_ += 95.0;
    return svc.submit(who, Submission{task->task_id, verdict, std::move(failures), 95.0});
  }

  double now_ = 0.0;
};

TEST(PoolItems, RoundTrip) {
  const auto pool = make_pool(2);
  for (const auto& item : pool) {
    const auto back = annotation::parse_pool_item(annotation::serialize_pool_item(item));
    EXPECT_EQ(back.instance, item.instance);
    EXPECT_EQ(back.generation, item.generation);
    EXPECT_EQ(back.prescreened, item.prescreened);
  }
  EXPECT_THROW(annotation::parse_pool_item(R"({"instance":{}})"), ParseError);
}

TEST_F(AnnotationTest, TaskCarriesOneTokenPerElement) {
  AnnotationService svc(make_pool(1), config());
  const auto task = svc.fetch_task("a");
  ASSERT_TRUE(task.has_value());
  ASSERT_EQ(task->attention_tokens.size(), 4u);
  EXPECT_EQ(task->attention_tokens[0].element, "goal");
  EXPECT_EQ(task->attention_tokens[3].index, 3);
  std::set<std::string> distinct;
  for (const auto& t : task->attention_tokens) distinct.insert(t.token);
  EXPECT_EQ(distinct.size(), 4u);
  // Fetching again returns the open task.
  EXPECT_EQ(svc.fetch_task("a")->task_id, task->task_id);
  const auto j = svc.task_json(*task);
  EXPECT_EQ(j.at("instance").at("reference_steps").size(), 4u);
  EXPECT_EQ(j.at("generation_steps").size(), 3u);
}

TEST_F(AnnotationTest, EachItemGetsDistinctAnnotatorsUpToQuota) {
  auto cfg = config();
  cfg.annotators_per_item = 2;
  AnnotationService svc(make_pool(2), cfg);
  std::map<std::string, std::set<std::string>> seen;  // instance -> annotators
  for (const std::string who : {"a", "b", "c"}) {
    while (true) {
      const auto task = svc.fetch_task(who);
      if (!task) break;
      const auto& inst = svc.pool()[task->pool_index].instance.id;
      EXPECT_TRUE(seen[inst].insert(who).second) << who << " got " << inst << " twice";
      EXPECT_TRUE(complete(svc, who, corpus::Verdict::no_failure).accepted);
    }
  }
  for (const auto& [inst, who] : seen) EXPECT_EQ(who.size(), 2u) << inst;
  EXPECT_EQ(svc.export_lines().size(), 4u);
}

TEST_F(AnnotationTest, LockBoundary) {
  AnnotationService svc(make_pool(1), config());
  const auto task = *svc.fetch_task("a");
  for (const auto& t : task.attention_tokens) svc.record_attention("a", task.task_id, t.token);
  const Submission s{task.task_id, corpus::Verdict::no_failure, {}, 0.0};
  now_ = 89.999;
  EXPECT_EQ(svc.submit("a", s).reason, "too_fast");
  now_ = 90.0;
  const auto r = svc.submit("a", s);
  EXPECT_TRUE(r.accepted);
  EXPECT_DOUBLE_EQ(r.record->elapsed_seconds, 90.0);
  EXPECT_EQ(svc.submit("a", s).reason, "already_submitted");
}

TEST_F(AnnotationTest, AttentionIsIdempotentAndScoped) {
  AnnotationService svc(make_pool(2), config());
  const auto ta = *svc.fetch_task("a");
  const auto tb = *svc.fetch_task("b");
  const auto& tok = ta.attention_tokens[1].token;
  EXPECT_EQ(svc.record_attention("a", ta.task_id, tok).acknowledged.size(), 1u);
  EXPECT_EQ(svc.record_attention("a", ta.task_id, tok).acknowledged.size(), 1u);
  EXPECT_THROW(svc.record_attention("a", ta.task_id, tb.attention_tokens[0].token), ValidationError);
  EXPECT_THROW(svc.record_attention("b", ta.task_id, tok), ValidationError);
  EXPECT_THROW(svc.record_attention("a", "task-999999", tok), ValidationError);
}

TEST_F(AnnotationTest, SubmissionValidation) {
  AnnotationService svc(make_pool(1), config());
  const auto task = *svc.fetch_task("a");
  for (const auto& t : task.attention_tokens) svc.record_attention("a", task.task_id, t.token);
  now_ = 100.0;
  auto sub = [&](corpus::Verdict v, std::vector<corpus::CriticalFailure> f) {
    return svc.submit("a", Submission{task.task_id, v, std::move(f), 100.0});
  };
  EXPECT_EQ(sub(corpus::Verdict::has_failure, {{"x", {5}, {}}}).reason, "bad_reference");
  EXPECT_EQ(sub(corpus::Verdict::has_failure, {{"x", {}, {4}}}).reason, "bad_reference");
  EXPECT_EQ(sub(corpus::Verdict::has_failure, {{" ", {1}, {1}}}).reason, "bad_reference");
  EXPECT_EQ(sub(corpus::Verdict::has_failure, {}).reason, "inconsistent_verdict");
  EXPECT_EQ(sub(corpus::Verdict::no_failure, {{"x", {1}, {1}}}).reason, "inconsistent_verdict");
  const auto ok = sub(corpus::Verdict::has_failure, {{"x", {4}, {3}}});
  EXPECT_TRUE(ok.accepted);
  EXPECT_EQ(ok.record->binary(), corpus::Verdict::has_failure);
  EXPECT_THROW(svc.submit("b", Submission{task.task_id, corpus::Verdict::no_failure, {}, 0}), ValidationError);
}

TEST_F(AnnotationTest, RestartRestoresAcceptedWork) {
  test::TempDir dir;
  const auto store = dir / "store.jsonl";
  std::string first_task;
  {
    AnnotationService svc(make_pool(2), config(store));
    // An issued but abandoned task, then an accepted one on another item.
    first_task = svc.fetch_task("x")->task_id;
    ASSERT_TRUE(complete(svc, "a", corpus::Verdict::no_failure).accepted);
  }
  AnnotationService svc(make_pool(2), config(store));
  ASSERT_EQ(svc.export_lines().size(), 1u);
  const auto before = corpus::parse_annotation(svc.export_lines()[0]);

  // "a" is never handed the item it already labelled.
  const auto next = svc.fetch_task("a");
  ASSERT_TRUE(next.has_value());
  EXPECT_NE(svc.pool()[next->pool_index].instance.id, before.instance_id);
  EXPECT_NE(next->task_id, before.task_id);
  now_ += 95.0;
  for (const auto& t : next->attention_tokens) svc.record_attention("a", next->task_id, t.token);
  ASSERT_TRUE(svc.submit("a", Submission{next->task_id, corpus::Verdict::no_failure, {}, 0}).accepted);
  EXPECT_FALSE(svc.fetch_task("a").has_value());

  std::set<std::string> task_ids;
  for (const auto& line : svc.export_lines()) {
    EXPECT_TRUE(task_ids.insert(corpus::parse_annotation(line).task_id).second) << line;
  }
  std::string joined;
  for (const auto& line : svc.export_lines()) joined += line + "\n";
  EXPECT_EQ(test::read_file(store), joined);
}

TEST_F(AnnotationTest, CorruptStoreRefusesToStart) {
  test::TempDir dir;
  test::write_file(dir / "store.jsonl", "{broken\n");
  EXPECT_THROW(AnnotationService(make_pool(1), config(dir / "store.jsonl")), ParseError);
}

class AnnotationHttp : public AnnotationTest {
 protected:
  util::HttpReply call(AnnotationService& svc, const std::string& method, const std::string& path,
                       const std::string& bearer, const std::string& body = {}) {
    util::HttpRequest r;
    r.method = method;
    r.path = path;
    if (!bearer.empty()) r.headers["authorization"] = "Bearer " + bearer;
    r.body = body;
    return svc.handle(r);
  }
};

TEST_F(AnnotationHttp, StatusCodes) {
  AnnotationService svc(make_pool(1), config());
  EXPECT_EQ(call(svc, "GET", "/healthz", "").status, 200);
  EXPECT_EQ(call(svc, "POST", "/v1/session", "", "{oops").status, 400);
  EXPECT_EQ(call(svc, "POST", "/v1/session", "", R"({"annotator_id":""})").status, 400);
  EXPECT_EQ(call(svc, "GET", "/v1/task", "").status, 401);
  EXPECT_EQ(call(svc, "GET", "/v1/task", "bogus").status, 401);
  EXPECT_EQ(call(svc, "GET", "/nowhere", "").status, 404);
  EXPECT_EQ(call(svc, "GET", "/v1/export", "").status, 403);
  EXPECT_EQ(call(svc, "GET", "/v1/export", "admin").status, 200);

  const auto tok = nlohmann::json::parse(call(svc, "POST", "/v1/session", "", R"({"annotator_id":"a"})").body)
                       .at("session_token")
                       .get<std::string>();
  EXPECT_EQ(call(svc, "DELETE", "/v1/task", tok).status, 405);
  ASSERT_EQ(call(svc, "GET", "/v1/task", tok).status, 200);
  EXPECT_EQ(call(svc, "POST", "/v1/attention", tok, R"({"task_id":"task-000001","token":"nope"})").status, 400);
  EXPECT_EQ(call(svc, "POST", "/v1/submit", tok, R"({"task_id":"task-000001"})").status, 400);

  // A second annotator on a one-item pool with quota three still gets it; a
  // fourth finds nothing left.
  for (const std::string who : {"b", "c"}) {
    const auto t = nlohmann::json::parse(call(svc, "POST", "/v1/session", "", "{\"annotator_id\":\"" + who + "\"}").body)
                       .at("session_token")
                       .get<std::string>();
    EXPECT_EQ(call(svc, "GET", "/v1/task", t).status, 200);
  }
  const auto d = nlohmann::json::parse(call(svc, "POST", "/v1/session", "", R"({"annotator_id":"d"})").body)
                     .at("session_token")
                     .get<std::string>();
  EXPECT_EQ(call(svc, "GET", "/v1/task", d).status, 204);
}

TEST_F(AnnotationHttp, ExportDisabledWithoutAdminToken) {
  auto cfg = config();
  cfg.admin_token.clear();
  AnnotationService svc(make_pool(1), cfg);
  EXPECT_EQ(call(svc, "GET", "/v1/export", "").status, 403);
  EXPECT_EQ(call(svc, "GET", "/v1/export", "admin").status, 403);
}

TEST_F(AnnotationHttp, OverRealSocket) {
  AnnotationService svc(make_pool(1), config());
  util::HttpHost host([&](const util::HttpRequest& r) { return svc.handle(r); });
  const int port = host.start("127.0.0.1", 0);
  auto client = gateway::make_http_transport("http://127.0.0.1:" + std::to_string(port), 10.0);
  const auto res = client->post("/v1/session", R"({"annotator_id":"net"})", {});
  ASSERT_EQ(res.status, 200) << res.error;
  const auto tok = nlohmann::json::parse(res.body).at("session_token").get<std::string>();
  const auto sub = client->post("/v1/submit", R"({"task_id":"x","verdict":"no_failure"})", {{"Authorization", "Bearer " + tok}});
  EXPECT_EQ(sub.status, 400);
  host.stop();
}

}  // namespace

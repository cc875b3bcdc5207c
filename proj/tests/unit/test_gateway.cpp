#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "fixtures.hpp"
#include "how2/gateway/gateway.hpp"
#include "how2/util/config.hpp"
#include "how2/util/error.hpp"
#include "mock_llm.hpp"

namespace {

using namespace how2;
using gateway::GatewayConfig;
using test::MockLlm;

std::shared_ptr<MockLlm> echo_llm() {
  auto llm = std::make_shared<MockLlm>();
  llm->on_chat([](const std::string& prompt, const nlohmann::json&) { return "echo: " + prompt; });
  return llm;
}

class HeaderCapture final : public gateway::Transport {
 public:
  gateway::HttpResponse post(const std::string&, const std::string&,
                             const std::map<std::string, std::string>& headers) override {
    seen = headers;
    return {200, MockLlm::chat_body("ok"), {}};
  }
  std::map<std::string, std::string> seen;
};

TEST(Gateway, CompletesAndCachesIdenticalRequests) {
  auto llm = echo_llm();
  auto gw = test::make_gateway(llm);
  const auto a = gw->complete("hello");
  const auto b = gw->complete("hello");
  EXPECT_EQ(a.response_text, "echo: hello");
  EXPECT_EQ(b.response_text, a.response_text);
  EXPECT_EQ(a.request_hash, b.request_hash);
  EXPECT_FALSE(a.from_cache);
  EXPECT_TRUE(b.from_cache);
  EXPECT_EQ(llm->requests(), 1u);
  EXPECT_EQ(gw->stats().cache_hits, 1u);
}

TEST(Gateway, DecodingParamsArePartOfTheCacheKey) {
  auto llm = echo_llm();
  auto gw = test::make_gateway(llm);
  gateway::DecodingParams p;
  const auto a = gw->complete("x", p);
  p.seed = 7;
  const auto b = gw->complete("x", p);
  p.temperature = 0.7;
  const auto c = gw->complete("x", p);
  EXPECT_NE(a.request_hash, b.request_hash);
  EXPECT_NE(b.request_hash, c.request_hash);
  EXPECT_EQ(llm->requests(), 3u);
  const auto reqs = llm->chat_requests();
  ASSERT_EQ(reqs.size(), 3u);
  EXPECT_EQ(reqs[1].at("seed"), 7);
  EXPECT_DOUBLE_EQ(reqs[2].at("temperature").get<double>(), 0.7);
  EXPECT_EQ(reqs[0].at("model"), "mock-model");
}

TEST(Gateway, RetriesTransientFailures) {
  auto llm = echo_llm();
  llm->fail_next(2, 503);
  auto gw = test::make_gateway(llm);
  EXPECT_EQ(gw->complete("p").response_text, "echo: p");
  EXPECT_EQ(gw->stats().attempts, 3u);
  EXPECT_EQ(gw->stats().failed_attempts, 2u);
}

TEST(Gateway, RateLimitIsRetryable) {
  auto llm = echo_llm();
  llm->fail_next(1, 429);
  auto gw = test::make_gateway(llm);
  EXPECT_NO_THROW(gw->complete("p"));
}

TEST(Gateway, GivesUpAfterMaxAttempts) {
  auto llm = echo_llm();
  llm->fail_next(3, 500);
  auto gw = test::make_gateway(llm);
  EXPECT_THROW(gw->complete("p"), GatewayError);
  EXPECT_EQ(llm->requests(), 3u);
  // The failure is not cached; the next call reaches the endpoint again.
  EXPECT_EQ(gw->complete("p").response_text, "echo: p");
}

TEST(Gateway, ClientErrorsAreNotRetried) {
  auto llm = echo_llm();
  llm->fail_next(1, 400);
  auto gw = test::make_gateway(llm);
  EXPECT_THROW(gw->complete("p"), GatewayError);
  EXPECT_EQ(llm->requests(), 1u);
}

TEST(Gateway, MalformedBodyIsProtocolErrorAndNotCached) {
  auto transport_calls = std::make_shared<int>(0);
  class Bad final : public gateway::Transport {
   public:
    explicit Bad(std::shared_ptr<int> n) : n_(std::move(n)) {}
    gateway::HttpResponse post(const std::string&, const std::string&,
                               const std::map<std::string, std::string>&) override {
      ++*n_;
      return {200, R"({"choices":[]})", {}};
    }
    std::shared_ptr<int> n_;
  };
  gateway::ModelGateway gw(test::test_gateway_config(), std::make_shared<Bad>(transport_calls));
  EXPECT_THROW(gw.complete("p"), ProtocolError);
  EXPECT_THROW(gw.complete("p"), ProtocolError);
  EXPECT_EQ(*transport_calls, 2);
}

TEST(Gateway, OfflineMissIsGatewayError) {
  auto llm = echo_llm();
  auto cfg = test::test_gateway_config();
  cfg.offline = true;
  auto gw = test::make_gateway(llm, cfg);
  EXPECT_THROW(gw->complete("p"), GatewayError);
  EXPECT_EQ(llm->requests(), 0u);
}

TEST(Gateway, DiskCacheServesOfflineRerun) {
  test::TempDir dir;
  auto llm = echo_llm();
  auto cfg = test::test_gateway_config();
  cfg.cache_dir = dir.path() / "cache";
  {
    auto gw = test::make_gateway(llm, cfg);
    EXPECT_EQ(gw->complete("persist me").response_text, "echo: persist me");
    (void)gw->embed({"alpha", "beta"});
  }
  EXPECT_EQ(llm->requests(), 2u);

  cfg.offline = true;
  auto fresh = std::make_shared<MockLlm>();
  auto gw = test::make_gateway(fresh, cfg);
  const auto ex = gw->complete("persist me");
  EXPECT_EQ(ex.response_text, "echo: persist me");
  EXPECT_TRUE(ex.from_cache);
  EXPECT_EQ(gw->embed({"alpha", "beta"}).size(), 2u);
  EXPECT_EQ(fresh->requests(), 0u);
}

TEST(Gateway, EmbeddingsAreUnitNorm) {
  auto llm = std::make_shared<MockLlm>();
  llm->on_embed([](const std::string& text) { return std::vector<double>{3.0 * text.size(), 4.0 * text.size()}; });
  auto gw = test::make_gateway(llm);
  const auto vecs = gw->embed({"a", "bbb"});
  ASSERT_EQ(vecs.size(), 2u);
  for (const auto& v : vecs) {
    EXPECT_NEAR(v[0], 0.6, 1e-12);
    EXPECT_NEAR(v[1], 0.8, 1e-12);
  }
}

TEST(Gateway, EmbeddingBatchesSplitAndKeepOrder) {
  auto llm = std::make_shared<MockLlm>();
  auto cfg = test::test_gateway_config();
  cfg.embed_batch_size = 3;
  auto gw = test::make_gateway(llm, cfg);
  std::vector<std::string> texts;
  for (int i = 0; i < 8; ++i) texts.push_back("text " + std::to_string(i));
  const auto vecs = gw->embed(texts);
  ASSERT_EQ(vecs.size(), 8u);
  EXPECT_EQ(llm->requests_for("/v1/embeddings"), 3u);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto expected = test::hash_embedding(texts[i]);
    double norm = 0.0;
    for (double x : expected) norm += x * x;
    norm = std::sqrt(norm);
    for (std::size_t k = 0; k < expected.size(); ++k) EXPECT_NEAR(vecs[i][k], expected[k] / norm, 1e-12);
  }
}

TEST(Gateway, ZeroOrRaggedEmbeddingsAreProtocolErrors) {
  auto zero = std::make_shared<MockLlm>();
  zero->on_embed([](const std::string&) { return std::vector<double>{0.0, 0.0}; });
  EXPECT_THROW(test::make_gateway(zero)->embed({"a"}), ProtocolError);

  auto ragged = std::make_shared<MockLlm>();
  ragged->on_embed([](const std::string& t) { return std::vector<double>(t.size(), 1.0); });
  EXPECT_THROW(test::make_gateway(ragged)->embed({"a", "bb"}), ProtocolError);

  EXPECT_THROW(test::make_gateway(zero)->embed({}), ValidationError);
}

TEST(Gateway, ScoreContinuationReturnsOnlyContinuationTokens) {
  auto llm = std::make_shared<MockLlm>();
  llm->on_logprob([](const std::string&, std::size_t idx) { return -0.1 * static_cast<double>(idx + 1); });
  auto gw = test::make_gateway(llm);
  const std::string prompt = "Goal: boil water\n";
  const std::string cont = "1. Fill the pot\n2. Heat it";
  const auto lps = gw->score_continuation(prompt, cont);
  const auto all = MockLlm::echo_tokens(prompt + cont);
  const auto prompt_tokens = MockLlm::echo_tokens(prompt).size();
  ASSERT_EQ(lps.size(), all.size() - prompt_tokens);
  std::string rebuilt;
  for (std::size_t i = 0; i < lps.size(); ++i) {
    rebuilt += lps[i].token;
    EXPECT_NEAR(lps[i].logprob, -0.1 * static_cast<double>(prompt_tokens + i + 1), 1e-12);
  }
  EXPECT_EQ(rebuilt, cont);
  EXPECT_TRUE(gw->score_continuation(prompt, "").empty());
}

TEST(Gateway, MissingLogprobSupportIsCapabilityError) {
  auto llm = std::make_shared<MockLlm>();
  llm->disable_logprobs();
  auto gw = test::make_gateway(llm);
  EXPECT_THROW(gw->score_continuation("a ", "b"), CapabilityError);
  EXPECT_EQ(llm->requests(), 1u);
}

TEST(Gateway, ConcurrencyNeverExceedsMaxInFlight) {
  auto llm = std::make_shared<MockLlm>();
  llm->on_chat([](const std::string& prompt, const nlohmann::json&) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    return prompt;
  });
  auto cfg = test::test_gateway_config();
  cfg.max_in_flight = 2;
  auto gw = test::make_gateway(llm, cfg);
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) threads.emplace_back([&gw, i] { (void)gw->complete("p" + std::to_string(i)); });
  for (auto& t : threads) t.join();
  EXPECT_LE(gw->stats().max_in_flight_observed, 2u);
  EXPECT_GE(gw->stats().max_in_flight_observed, 1u);
  EXPECT_EQ(llm->requests(), 8u);
}

TEST(Gateway, ConcurrentIdenticalRequestsShareOneCall) {
  auto llm = std::make_shared<MockLlm>();
  llm->on_chat([](const std::string& prompt, const nlohmann::json&) {
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    return prompt;
  });
  auto gw = test::make_gateway(llm);
  std::vector<std::thread> threads;
  for (int i = 0; i < 6; ++i) threads.emplace_back([&gw] { EXPECT_EQ(gw->complete("same").response_text, "same"); });
  for (auto& t : threads) t.join();
  EXPECT_EQ(llm->requests(), 1u);
}

TEST(Gateway, BearerTokenComesFromEnvironment) {
  auto capture = std::make_shared<HeaderCapture>();
  auto cfg = test::test_gateway_config();
  cfg.api_key_env = "HOW2_TEST_GATEWAY_KEY";
  ::setenv("HOW2_TEST_GATEWAY_KEY", "sekrit", 1);
  gateway::ModelGateway gw(cfg, capture);
  (void)gw.complete("p");
  ::unsetenv("HOW2_TEST_GATEWAY_KEY");
  EXPECT_EQ(capture->seen.at("Authorization"), "Bearer sekrit");
}

TEST(Gateway, InvalidConfigRejected) {
  auto cfg = test::test_gateway_config();
  cfg.max_in_flight = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = test::test_gateway_config();
  cfg.retry.max_attempts = 0;
  EXPECT_THROW(gateway::ModelGateway{cfg}, ConfigError);
}

TEST(Gateway, ReadsConfigSection) {
  const auto cfg = util::Config::parse(
      "[judge_gateway]\nendpoint_url = \"http://localhost:9\"\nmodel_name = \"j\"\nmax_in_flight = 7\n"
      "max_attempts = 5\nseed = 11\nmax_tokens = 256\n");
  const auto gc = GatewayConfig::from_config(cfg, "judge_gateway");
  EXPECT_EQ(gc.endpoint_url, "http://localhost:9");
  EXPECT_EQ(gc.model_name, "j");
  EXPECT_EQ(gc.max_in_flight, 7u);
  EXPECT_EQ(gc.retry.max_attempts, 5);
  EXPECT_EQ(gc.seed, 11);
  EXPECT_EQ(gc.max_tokens, 256);
}

TEST(Gateway, RealHttpRoundTrip) {
  auto llm = echo_llm();
  test::MockLlmServer server(llm);
  auto cfg = test::test_gateway_config();
  cfg.endpoint_url = server.url();
  gateway::ModelGateway gw(cfg);
  EXPECT_EQ(gw.complete("over the wire").response_text, "echo: over the wire");
  EXPECT_EQ(gw.embed({"a", "b", "c"}).size(), 3u);
  EXPECT_EQ(gw.score_continuation("x ", "y z").size(), 2u);
}

TEST(Gateway, UnreachableEndpointIsGatewayError) {
  auto cfg = test::test_gateway_config();
  cfg.endpoint_url = "http://127.0.0.1:1";
  cfg.retry.max_attempts = 2;
  cfg.timeout_seconds = 2.0;
  gateway::ModelGateway gw(cfg);
  EXPECT_THROW(gw.complete("p"), GatewayError);
  EXPECT_EQ(gw.stats().failed_attempts, 2u);
}

}  // namespace

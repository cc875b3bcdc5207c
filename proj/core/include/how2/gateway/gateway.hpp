#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "how2/util/config.hpp"

namespace how2::gateway {

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds backoff_base{250};
};

struct GatewayConfig {
  std::string endpoint_url;
  std::string model_name;
  // Name of the environment variable holding the bearer token (may be unset).
  std::string api_key_env = "HOW2_API_KEY";
  std::size_t max_in_flight = 4;
  RetryPolicy retry;
  std::filesystem::path cache_dir;
  double temperature = 0.0;
  std::vector<std::string> stop_sequences;
  std::optional<int> max_tokens;
  std::optional<std::int64_t> seed;
  double timeout_seconds = 120.0;
  std::size_t embed_batch_size = 64;
  // Cache misses raise GatewayError instead of touching the network.
  bool offline = false;

  /// Throws ConfigError when an invariant (max_in_flight >= 1, max_attempts >= 1) fails.
  void validate() const;

  /// Reads `<section>.endpoint_url`, `<section>.model_name`, ... from `cfg`.
  static GatewayConfig from_config(const util::Config& cfg, const std::string& section = "gateway");
};

// Per-request decoding overrides; the cache key covers all of them.
struct DecodingParams {
  double temperature = 0.0;
  std::vector<std::string> stop;
  std::optional<int> max_tokens;
  std::optional<std::int64_t> seed;
};

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;
};

struct ChatExchange {
  std::string request_hash;
  std::string prompt;
  std::string response_text;
  std::optional<std::vector<TokenLogprob>> token_logprobs;
  bool from_cache = false;
};

struct HttpResponse {
  int status = 0;  // 0 means the transport never got a response
  std::string body;
  std::string error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const std::string& path, const std::string& body,
                            const std::map<std::string, std::string>& headers) = 0;
};

/// cpp-httplib backed transport for http:// and https:// base URLs.
std::shared_ptr<Transport> make_http_transport(const std::string& base_url, double timeout_seconds);

// Translates between gateway calls and one HTTP dialect.
class WireDialect {
 public:
  virtual ~WireDialect() = default;

  virtual std::string chat_path() const = 0;
  virtual nlohmann::json chat_request(const std::string& model, const std::string& prompt,
                                      const DecodingParams& params) const = 0;
  virtual std::string parse_chat(const std::string& body) const = 0;

  virtual std::string embed_path() const = 0;
  virtual nlohmann::json embed_request(const std::string& model, const std::vector<std::string>& texts) const = 0;
  virtual std::vector<std::vector<double>> parse_embed(const std::string& body) const = 0;

  virtual std::string logprob_path() const = 0;
  virtual nlohmann::json logprob_request(const std::string& model, const std::string& prompt,
                                         const std::string& continuation) const = 0;
  // Returns only the tokens that start at or after `prompt_bytes`.
  virtual std::vector<TokenLogprob> parse_logprobs(const std::string& body, std::size_t prompt_bytes) const = 0;
};

/// The de-facto chat-completions shape (/v1/chat/completions, /v1/embeddings,
/// /v1/completions with echo + logprobs).
std::shared_ptr<const WireDialect> chat_completions_dialect();

struct GatewayStats {
  std::uint64_t calls = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t attempts = 0;
  std::uint64_t failed_attempts = 0;
  std::uint64_t max_in_flight_observed = 0;
};

class ModelGateway {
 public:
  explicit ModelGateway(GatewayConfig config, std::shared_ptr<Transport> transport = nullptr,
                        std::shared_ptr<const WireDialect> dialect = nullptr);
  ~ModelGateway();

  ModelGateway(const ModelGateway&) = delete;
  ModelGateway& operator=(const ModelGateway&) = delete;

  /// Chat completion with the configured decoding parameters.
  ChatExchange complete(const std::string& prompt);
  ChatExchange complete(const std::string& prompt, const DecodingParams& params);

  /// One unit-norm vector per input text. Throws ProtocolError on a
  /// dimension mismatch or a zero vector.
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts);

  /// Teacher-forced log-probabilities of `continuation` given `prompt`.
  /// Throws CapabilityError when the endpoint cannot echo logprobs.
  std::vector<TokenLogprob> score_continuation(const std::string& prompt, const std::string& continuation);

  DecodingParams default_params() const;
  const GatewayConfig& config() const noexcept { return config_; }
  GatewayStats stats() const;

 private:
  enum class Kind { chat, embed, logprob };

  struct Fetched {
    std::string key;
    std::string body;
    bool from_cache = false;
  };

  Fetched fetch(Kind kind, const std::string& path, const nlohmann::json& request,
                const std::function<void(const std::string&)>& validate);
  std::string fetch_remote(Kind kind, const std::string& path, const std::string& payload);

  std::optional<std::string> cache_read(const std::string& key);
  void cache_write(const std::string& key, const std::string& body);

  void acquire_slot();
  void release_slot();

  GatewayConfig config_;
  std::shared_ptr<Transport> transport_;
  std::shared_ptr<const WireDialect> dialect_;

  std::mutex slot_mu_;
  std::condition_variable slot_cv_;
  std::size_t in_flight_ = 0;

  std::mutex cache_mu_;
  std::unordered_map<std::string, std::string> memory_cache_;
  std::unordered_map<std::string, std::shared_future<std::string>> pending_;

  std::atomic<std::uint64_t> calls_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
  std::atomic<std::uint64_t> attempts_{0};
  std::atomic<std::uint64_t> failed_attempts_{0};
  std::atomic<std::uint64_t> max_in_flight_observed_{0};
};

}  // namespace how2::gateway

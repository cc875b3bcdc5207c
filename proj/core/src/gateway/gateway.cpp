#include "how2/gateway/gateway.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "how2/util/digest.hpp"
#include "how2/util/error.hpp"

namespace how2::gateway {

using nlohmann::json;

void GatewayConfig::validate() const {
  if (max_in_flight < 1) throw ConfigError("gateway max_in_flight must be >= 1");
  if (retry.max_attempts < 1) throw ConfigError("gateway retry.max_attempts must be >= 1");
  if (retry.backoff_base.count() < 0) throw ConfigError("gateway retry.backoff_base_ms must be >= 0");
  if (embed_batch_size < 1) throw ConfigError("gateway embed_batch_size must be >= 1");
}

GatewayConfig GatewayConfig::from_config(const util::Config& cfg, const std::string& section) {
  const auto key = [&](const char* name) { return section + "." + name; };
  GatewayConfig out;
  out.endpoint_url = cfg.get_string_or(key("endpoint_url"), "");
  out.model_name = cfg.get_string_or(key("model_name"), "");
  out.api_key_env = cfg.get_string_or(key("api_key_env"), out.api_key_env);
  out.max_in_flight = static_cast<std::size_t>(cfg.get_int_or(key("max_in_flight"), 4));
  out.retry.max_attempts = static_cast<int>(cfg.get_int_or(key("max_attempts"), 3));
  out.retry.backoff_base = std::chrono::milliseconds(cfg.get_int_or(key("backoff_base_ms"), 250));
  out.cache_dir = cfg.get_string_or(key("cache_dir"), "");
  out.temperature = cfg.get_number_or(key("temperature"), 0.0);
  out.stop_sequences = cfg.get_string_list(key("stop_sequences")).value_or(std::vector<std::string>{});
  if (auto v = cfg.get_int(key("max_tokens"))) out.max_tokens = static_cast<int>(*v);
  if (auto v = cfg.get_int(key("seed"))) out.seed = *v;
  out.timeout_seconds = cfg.get_number_or(key("timeout_seconds"), 120.0);
  out.embed_batch_size = static_cast<std::size_t>(cfg.get_int_or(key("embed_batch_size"), 64));
  out.offline = cfg.get_bool(key("offline")).value_or(false);
  if (out.max_in_flight < 1 || out.retry.max_attempts < 1) out.validate();
  return out;
}

ModelGateway::ModelGateway(GatewayConfig config, std::shared_ptr<Transport> transport,
                           std::shared_ptr<const WireDialect> dialect)
    : config_(std::move(config)), transport_(std::move(transport)), dialect_(std::move(dialect)) {
  config_.validate();
  if (const char* off = std::getenv("HOW2_OFFLINE"); off && std::string(off) == "1") config_.offline = true;
  if (!dialect_) dialect_ = chat_completions_dialect();
  if (!transport_ && !config_.endpoint_url.empty()) {
    transport_ = make_http_transport(config_.endpoint_url, config_.timeout_seconds);
  }
}

ModelGateway::~ModelGateway() = default;

DecodingParams ModelGateway::default_params() const {
  return DecodingParams{config_.temperature, config_.stop_sequences, config_.max_tokens, config_.seed};
}

GatewayStats ModelGateway::stats() const {
  return GatewayStats{calls_.load(), cache_hits_.load(), attempts_.load(), failed_attempts_.load(),
                      max_in_flight_observed_.load()};
}

void ModelGateway::acquire_slot() {
  std::unique_lock lock(slot_mu_);
  slot_cv_.wait(lock, [&] { return in_flight_ < config_.max_in_flight; });
  ++in_flight_;
  auto seen = max_in_flight_observed_.load();
  while (in_flight_ > seen && !max_in_flight_observed_.compare_exchange_weak(seen, in_flight_)) {
  }
}

void ModelGateway::release_slot() {
  {
    std::lock_guard lock(slot_mu_);
    --in_flight_;
  }
  slot_cv_.notify_one();
}

std::optional<std::string> ModelGateway::cache_read(const std::string& key) {
  {
    std::lock_guard lock(cache_mu_);
    if (auto it = memory_cache_.find(key); it != memory_cache_.end()) return it->second;
  }
  if (config_.cache_dir.empty()) return std::nullopt;
  const auto path = config_.cache_dir / key.substr(0, 2) / (key + ".json");
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string body = ss.str();
  std::lock_guard lock(cache_mu_);
  memory_cache_.emplace(key, body);
  return body;
}

void ModelGateway::cache_write(const std::string& key, const std::string& body) {
  {
    std::lock_guard lock(cache_mu_);
    memory_cache_[key] = body;
  }
  if (config_.cache_dir.empty()) return;
  const auto dir = config_.cache_dir / key.substr(0, 2);
  std::filesystem::create_directories(dir);
  const auto final_path = dir / (key + ".json");
  auto tmp = final_path;
  tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write cache entry " + tmp.string());
    out << body;
  }
  std::filesystem::rename(tmp, final_path);
}

std::string ModelGateway::fetch_remote(Kind kind, const std::string& path, const std::string& payload) {
  if (config_.offline) throw GatewayError("offline mode: no cached response for request");
  if (!transport_) throw GatewayError("no endpoint configured and no cached response available");
  std::map<std::string, std::string> headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
      headers["Authorization"] = std::string("Bearer ") + key;
    }
  }
  std::string last_error;
  for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    ++attempts_;
    acquire_slot();
    HttpResponse res;
    try {
      res = transport_->post(path, payload, headers);
    } catch (...) {
      release_slot();
      throw;
    }
    release_slot();
    if (res.status >= 200 && res.status < 300) return std::move(res.body);

    ++failed_attempts_;
    const bool retryable = res.status == 0 || res.status == 429 || res.status >= 500;
    last_error = res.status == 0 ? "transport failure: " + res.error
                                 : "HTTP " + std::to_string(res.status) + ": " + res.body.substr(0, 200);
    spdlog::warn("gateway {} attempt {}/{} failed ({})", path, attempt, config_.retry.max_attempts, last_error);
    if (!retryable) {
      if (kind == Kind::logprob && (res.status == 400 || res.status == 404 || res.status == 501)) {
        throw CapabilityError("endpoint does not support echoed logprobs (" + last_error + ")");
      }
      throw GatewayError(last_error);
    }
    if (attempt < config_.retry.max_attempts) {
      std::this_thread::sleep_for(config_.retry.backoff_base * (1LL << std::min(attempt - 1, 16)));
    }
  }
  throw GatewayError("giving up after " + std::to_string(config_.retry.max_attempts) + " attempts: " + last_error);
}

ModelGateway::Fetched ModelGateway::fetch(Kind kind, const std::string& path, const json& request,
                                          const std::function<void(const std::string&)>& validate) {
  ++calls_;
  const std::string payload = request.dump();
  const std::string key = util::sha256_hex(path + "\n" + payload);

  if (auto cached = cache_read(key)) {
    ++cache_hits_;
    return {key, std::move(*cached), true};
  }

  std::promise<std::string> promise;
  std::shared_future<std::string> waiter;
  bool leader = false;
  {
    std::lock_guard lock(cache_mu_);
    if (auto it = memory_cache_.find(key); it != memory_cache_.end()) {
      ++cache_hits_;
      return {key, it->second, true};
    }
    if (auto it = pending_.find(key); it != pending_.end()) {
      waiter = it->second;
    } else {
      waiter = promise.get_future().share();
      pending_.emplace(key, waiter);
      leader = true;
    }
  }
  if (!leader) {
    ++cache_hits_;
    return {key, waiter.get(), true};
  }

  try {
    std::string body = fetch_remote(kind, path, payload);
    validate(body);
    cache_write(key, body);
    promise.set_value(body);
    std::lock_guard lock(cache_mu_);
    pending_.erase(key);
    return {key, std::move(body), false};
  } catch (...) {
    promise.set_exception(std::current_exception());
    std::lock_guard lock(cache_mu_);
    pending_.erase(key);
    throw;
  }
}

ChatExchange ModelGateway::complete(const std::string& prompt) { return complete(prompt, default_params()); }

ChatExchange ModelGateway::complete(const std::string& prompt, const DecodingParams& params) {
  const json request = dialect_->chat_request(config_.model_name, prompt, params);
  auto fetched = fetch(Kind::chat, dialect_->chat_path(), request,
                       [&](const std::string& body) { (void)dialect_->parse_chat(body); });
  ChatExchange ex;
  ex.request_hash = fetched.key;
  ex.prompt = prompt;
  ex.response_text = dialect_->parse_chat(fetched.body);
  ex.from_cache = fetched.from_cache;
  return ex;
}

namespace {

std::vector<std::vector<double>> normalized_batch(std::vector<std::vector<double>> vecs, std::size_t expected,
                                                  std::optional<std::size_t>& dim) {
  if (vecs.size() != expected) {
    throw ProtocolError("embedding endpoint returned " + std::to_string(vecs.size()) + " vectors for " +
                        std::to_string(expected) + " inputs");
  }
  for (auto& v : vecs) {
    if (!dim) dim = v.size();
    if (v.empty() || v.size() != *dim) throw ProtocolError("embedding dimension mismatch within request");
    double sq = 0.0;
    for (double x : v) sq += x * x;
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0) || !std::isfinite(norm)) throw ProtocolError("embedding vector cannot be normalized");
    for (double& x : v) x /= norm;
  }
  return vecs;
}

}  // namespace

std::vector<std::vector<double>> ModelGateway::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw ValidationError("embed requires at least one text");
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  std::optional<std::size_t> dim;
  for (std::size_t start = 0; start < texts.size(); start += config_.embed_batch_size) {
    const auto end = std::min(texts.size(), start + config_.embed_batch_size);
    std::vector<std::string> batch(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                   texts.begin() + static_cast<std::ptrdiff_t>(end));
    const json request = dialect_->embed_request(config_.model_name, batch);
    const auto expected = batch.size();
    auto fetched = fetch(Kind::embed, dialect_->embed_path(), request, [&](const std::string& body) {
      std::optional<std::size_t> probe;
      (void)normalized_batch(dialect_->parse_embed(body), expected, probe);
    });
    auto vecs = normalized_batch(dialect_->parse_embed(fetched.body), expected, dim);
    for (auto& v : vecs) out.push_back(std::move(v));
  }
  return out;
}

std::vector<TokenLogprob> ModelGateway::score_continuation(const std::string& prompt,
                                                           const std::string& continuation) {
  if (continuation.empty()) return {};
  const json request = dialect_->logprob_request(config_.model_name, prompt, continuation);
  auto fetched = fetch(Kind::logprob, dialect_->logprob_path(), request, [&](const std::string& body) {
    (void)dialect_->parse_logprobs(body, prompt.size());
  });
  return dialect_->parse_logprobs(fetched.body, prompt.size());
}

}  // namespace how2::gateway

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

namespace how2::util {

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;  // keys lower-cased
  std::string body;

  std::string header(const std::string& lower_name) const {
    const auto it = headers.find(lower_name);
    return it == headers.end() ? std::string{} : it->second;
  }
  std::string param(const std::string& name) const {
    const auto it = query.find(name);
    return it == query.end() ? std::string{} : it->second;
  }
};

struct HttpReply {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";

  static HttpReply json(int status, const nlohmann::ordered_json& j) { return {status, j.dump(), "application/json"}; }
  static HttpReply error(int status, std::string_view category, const std::string& message);
};

using HttpHandler = std::function<HttpReply(const HttpRequest&)>;

// Minimal HTTP/1.1 host: every request goes to one handler. Handlers run on
// the server's worker pool and must be thread-safe.
class HttpHost {
 public:
  explicit HttpHost(HttpHandler handler);
  ~HttpHost();

  HttpHost(const HttpHost&) = delete;
  HttpHost& operator=(const HttpHost&) = delete;

  /// Binds (port 0 picks a free port), serves on a background thread and
  /// returns the bound port. Throws IoError when binding fails.
  int start(const std::string& host, int port);

  /// Binds and serves on the calling thread until stop().
  void listen(const std::string& host, int port);

  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
};

}  // namespace how2::util

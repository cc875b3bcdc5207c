#include "how2/util/http_host.hpp"

#include <httplib.h>

#include <cctype>

#include "how2/util/error.hpp"

namespace how2::util {

HttpReply HttpReply::error(int status, std::string_view category, const std::string& message) {
  return json(status, {{"error", std::string(category)}, {"message", message}});
}

struct HttpHost::Impl {
  httplib::Server server;
  HttpHandler handler;

  void route(const httplib::Request& req, httplib::Response& res) {
    HttpRequest r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.query.emplace(k, v);
    for (const auto& [k, v] : req.headers) {
      std::string key = k;
      for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      r.headers.emplace(std::move(key), v);
    }
    r.body = req.body;
    HttpReply reply;
    try {
      reply = handler(r);
    } catch (const Error& e) {
      reply = HttpReply::error(500, to_string(e.category()), e.what());
    } catch (const std::exception& e) {
      reply = HttpReply::error(500, "internal", e.what());
    }
    res.status = reply.status;
    if (!reply.body.empty() || reply.status != 204) res.set_content(reply.body, reply.content_type);
  }
};

HttpHost::HttpHost(HttpHandler handler) : impl_(std::make_unique<Impl>()) {
  impl_->handler = std::move(handler);
  auto fn = [this](const httplib::Request& req, httplib::Response& res) { impl_->route(req, res); };
  impl_->server.Get(".*", fn);
  impl_->server.Post(".*", fn);
  impl_->server.Put(".*", fn);
  impl_->server.Delete(".*", fn);
}

HttpHost::~HttpHost() { stop(); }

int HttpHost::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound <= 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpHost::listen(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) throw IoError("cannot listen on " + host + ":" + std::to_string(port));
}

void HttpHost::stop() {
  if (impl_) impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace how2::util

#include <httplib.h>

#include "how2/gateway/gateway.hpp"
#include "how2/util/error.hpp"

namespace how2::gateway {
namespace {

// Splits "scheme://host[:port][/prefix]" into origin and path prefix.
std::pair<std::string, std::string> split_base_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint_url must include a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path_start), prefix};
}

class HttpTransport final : public Transport {
 public:
  HttpTransport(const std::string& base_url, double timeout_seconds) : timeout_(timeout_seconds) {
    std::tie(origin_, prefix_) = split_base_url(base_url);
  }

  HttpResponse post(const std::string& path, const std::string& body,
                    const std::map<std::string, std::string>& headers) override {
    httplib::Client client(origin_);
    const auto secs = static_cast<time_t>(timeout_);
    client.set_connection_timeout(std::min<time_t>(secs, 30), 0);
    client.set_read_timeout(secs, 0);
    client.set_write_timeout(secs, 0);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    std::string full_path = prefix_ + path;
    // A base URL that already ends in /v1 should not produce /v1/v1/...
    if (prefix_.size() >= 3 && prefix_.compare(prefix_.size() - 3, 3, "/v1") == 0 &&
        path.rfind("/v1/", 0) == 0) {
      full_path = prefix_ + path.substr(3);
    }
    auto res = client.Post(full_path, h, body, "application/json");
    HttpResponse out;
    if (!res) {
      out.status = 0;
      out.error = httplib::to_string(res.error());
      return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
  }

 private:
  std::string origin_;
  std::string prefix_;
  double timeout_;
};

}  // namespace

std::shared_ptr<Transport> make_http_transport(const std::string& base_url, double timeout_seconds) {
  return std::make_shared<HttpTransport>(base_url, timeout_seconds);
}

}  // namespace how2::gateway

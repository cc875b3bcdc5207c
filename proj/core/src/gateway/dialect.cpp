#include <nlohmann/json.hpp>

#include "how2/gateway/gateway.hpp"
#include "how2/util/error.hpp"

namespace how2::gateway {
namespace {

using nlohmann::json;

json parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("response body is not JSON: ") + e.what());
  }
}

class ChatCompletionsDialect final : public WireDialect {
 public:
  std::string chat_path() const override { return "/v1/chat/completions"; }

  json chat_request(const std::string& model, const std::string& prompt,
                    const DecodingParams& params) const override {
    json req;
    req["model"] = model;
    req["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});
    req["temperature"] = params.temperature;
    if (!params.stop.empty()) req["stop"] = params.stop;
    if (params.max_tokens) req["max_tokens"] = *params.max_tokens;
    if (params.seed) req["seed"] = *params.seed;
    return req;
  }

  std::string parse_chat(const std::string& body) const override {
    const json j = parse_body(body);
    try {
      const auto& content = j.at("choices").at(0).at("message").at("content");
      if (content.is_null()) return {};
      return content.get<std::string>();
    } catch (const json::exception& e) {
      throw ProtocolError(std::string("chat response missing choices[0].message.content: ") + e.what());
    }
  }

  std::string embed_path() const override { return "/v1/embeddings"; }

  json embed_request(const std::string& model, const std::vector<std::string>& texts) const override {
    return json{{"model", model}, {"input", texts}};
  }

  std::vector<std::vector<double>> parse_embed(const std::string& body) const override {
    const json j = parse_body(body);
    try {
      const auto& data = j.at("data");
      std::vector<std::vector<double>> out(data.size());
      for (std::size_t i = 0; i < data.size(); ++i) {
        const auto idx = data[i].contains("index") ? data[i].at("index").get<std::size_t>() : i;
        if (idx >= out.size()) throw ProtocolError("embedding index out of range");
        out[idx] = data[i].at("embedding").get<std::vector<double>>();
      }
      return out;
    } catch (const json::exception& e) {
      throw ProtocolError(std::string("embedding response malformed: ") + e.what());
    }
  }

  std::string logprob_path() const override { return "/v1/completions"; }

  json logprob_request(const std::string& model, const std::string& prompt,
                       const std::string& continuation) const override {
    return json{{"model", model}, {"prompt", prompt + continuation}, {"max_tokens", 0},
                {"echo", true},   {"logprobs", 1},                  {"temperature", 0.0}};
  }

  std::vector<TokenLogprob> parse_logprobs(const std::string& body, std::size_t prompt_bytes) const override {
    const json j = parse_body(body);
    const json* lp = nullptr;
    if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
      const auto& choice = j["choices"][0];
      if (choice.contains("logprobs") && choice["logprobs"].is_object()) lp = &choice["logprobs"];
    }
    if (!lp || !lp->contains("tokens") || !lp->contains("token_logprobs")) {
      throw CapabilityError("endpoint did not return echoed token logprobs");
    }
    try {
      const auto tokens = lp->at("tokens").get<std::vector<std::string>>();
      const auto& logprobs = lp->at("token_logprobs");
      std::vector<std::size_t> offsets;
      if (lp->contains("text_offset")) {
        offsets = lp->at("text_offset").get<std::vector<std::size_t>>();
      } else {
        std::size_t pos = 0;
        for (const auto& t : tokens) {
          offsets.push_back(pos);
          pos += t.size();
        }
      }
      if (offsets.size() != tokens.size() || logprobs.size() != tokens.size()) {
        throw ProtocolError("logprob arrays have mismatched lengths");
      }
      std::vector<TokenLogprob> out;
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (offsets[i] < prompt_bytes) continue;
        if (logprobs[i].is_null()) throw ProtocolError("continuation token without logprob");
        out.push_back({tokens[i], logprobs[i].get<double>()});
      }
      return out;
    } catch (const json::exception& e) {
      throw ProtocolError(std::string("logprob response malformed: ") + e.what());
    }
  }
};

}  // namespace

std::shared_ptr<const WireDialect> chat_completions_dialect() {
  static const auto dialect = std::make_shared<const ChatCompletionsDialect>();
  return dialect;
}

}  // namespace how2::gateway

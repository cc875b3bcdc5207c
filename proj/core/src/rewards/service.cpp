#include "how2/rewards/service.hpp"

#include "how2/corpus/tokenizer.hpp"
#include "how2/util/error.hpp"

namespace how2::rewards {

using nlohmann::json;

RewardService::RewardService(std::vector<corpus::ProcedureInstance> bench, gateway::ModelGateway& gateway,
                             const util::PromptLibrary& prompts, const corpus::TokenizerRegistry& tokenizers,
                             RewardConfig config)
    : gateway_(gateway), prompts_(prompts), tokenizers_(tokenizers), config_(std::move(config)) {
  config_.length.validate();
  (void)tokenizers_.get(config_.token_scheme);
  for (auto& inst : bench) {
    auto id = inst.id;
    bench_.insert_or_assign(std::move(id), std::move(inst));
  }
}

util::HttpReply RewardService::handle(const util::HttpRequest& request) const {
  if (request.path == "/healthz" && request.method == "GET") {
    return util::HttpReply::json(200, {{"status", "ok"}, {"instances", bench_.size()}});
  }
  if (request.path == "/v1/reward") {
    if (request.method != "POST") return util::HttpReply::error(405, "validation", "use POST");
    return reward(request.body);
  }
  return util::HttpReply::error(404, "validation", "no route " + request.path);
}

namespace {

template <typename T>
std::optional<T> optional_field(const json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end() || it->is_null()) return std::nullopt;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("field '") + name + "' has the wrong type");
  }
}

corpus::ProcedureInstance inline_instance(const json& j) {
  corpus::ProcedureInstance inst;
  inst.id = j.value("id", std::string("inline"));
  inst.goal = optional_field<std::string>(j, "goal").value_or("");
  inst.resources = optional_field<std::vector<std::string>>(j, "resources").value_or(std::vector<std::string>{});
  inst.steps = optional_field<std::vector<std::string>>(j, "reference_steps").value_or(std::vector<std::string>{});
  if (const auto topic = optional_field<std::string>(j, "topic")) inst.topic = corpus::parse_topic(*topic);
  if (inst.goal.empty()) throw ParseError("inline instance needs a non-empty 'goal'");
  if (inst.steps.empty()) throw ParseError("inline instance needs non-empty 'reference_steps'");
  return inst;
}

int status_for(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::parse:
    case ErrorCategory::domain:
    case ErrorCategory::validation:
      return 400;
    case ErrorCategory::undefined:
      return 422;
    case ErrorCategory::gateway:
    case ErrorCategory::protocol:
      return 502;
    default:
      return 500;
  }
}

}  // namespace

util::HttpReply RewardService::reward(const std::string& body) const {
  try {
    json req;
    try {
      req = json::parse(body);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("request body is not JSON: ") + e.what());
    }
    if (!req.is_object()) throw ParseError("request body must be an object");

    corpus::ProcedureInstance inst;
    if (const auto id = optional_field<std::string>(req, "instance_id")) {
      const auto it = bench_.find(*id);
      if (it == bench_.end()) return util::HttpReply::error(404, "validation", "unknown instance_id '" + *id + "'");
      inst = it->second;
    } else if (req.contains("instance")) {
      inst = inline_instance(req.at("instance"));
    } else {
      inst = inline_instance(req);
    }

    RewardRequest r;
    const auto answer = optional_field<std::string>(req, "answer_text");
    if (!answer) throw ParseError("missing field 'answer_text'");
    r.answer_text = *answer;
    if (const auto n = optional_field<std::int64_t>(req, "expected_n")) {
      if (*n < 0) throw ValidationError("expected_n must be >= 0");
      r.expected_n = static_cast<std::size_t>(*n);
    }
    r.gen_tokens = optional_field<std::int64_t>(req, "gen_tokens");
    r.ref_tokens = optional_field<std::int64_t>(req, "ref_tokens");

    const auto breakdown = total_reward(inst, r, gateway_, prompts_, tokenizers_, config_);
    auto out = breakdown.to_json();
    out["instance_id"] = inst.id;
    return util::HttpReply::json(200, out);
  } catch (const Error& e) {
    return util::HttpReply::error(status_for(e.category()), to_string(e.category()), e.what());
  }
}

}  // namespace how2::rewards

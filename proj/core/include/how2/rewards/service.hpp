#pragma once

#include <map>
#include <string>
#include <vector>

#include "how2/rewards/reward.hpp"
#include "how2/util/http_host.hpp"

namespace how2::rewards {

// POST /v1/reward
//   {"instance_id": ...} or {"instance": {"goal", "resources", "reference_steps"}}
//   (the inline fields may also sit at the top level), plus "answer_text",
//   optional "expected_n", "gen_tokens", "ref_tokens".
// GET /healthz
class RewardService {
 public:
  RewardService(std::vector<corpus::ProcedureInstance> bench, gateway::ModelGateway& gateway,
                const util::PromptLibrary& prompts, const corpus::TokenizerRegistry& tokenizers, RewardConfig config);

  util::HttpReply handle(const util::HttpRequest& request) const;

  std::size_t instance_count() const noexcept { return bench_.size(); }

 private:
  util::HttpReply reward(const std::string& body) const;

  std::map<std::string, corpus::ProcedureInstance> bench_;
  gateway::ModelGateway& gateway_;
  const util::PromptLibrary& prompts_;
  const corpus::TokenizerRegistry& tokenizers_;
  RewardConfig config_;
};

}  // namespace how2::rewards

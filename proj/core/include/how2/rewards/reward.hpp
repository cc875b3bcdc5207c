#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "how2/corpus/records.hpp"
#include "how2/scoring/judge.hpp"

namespace how2::corpus {
class TokenizerRegistry;
}

namespace how2::rewards {

struct LengthRewardConfig {
  double tau = 0.2;
  double alpha = 5.0;

  void validate() const;  // 0 < tau < 1, alpha > 0
};

/// 1 when the answer's final numbered list runs 1..k without a gap and,
/// if given, k equals expected_n.
int format_reward(std::string_view answer, std::optional<std::size_t> expected_n);

/// Full credit while |r - 1| <= tau, then exp(-alpha (|r - 1| - tau) / (1 - tau)).
double length_reward_for_ratio(double ratio, const LengthRewardConfig& cfg = {});

/// r = gen / ref. Throws UndefinedError when ref_tokens is 0.
double length_reward(std::int64_t gen_tokens, std::int64_t ref_tokens, const LengthRewardConfig& cfg = {});

struct JudgeReward {
  int reward = 0;
  bool valid = true;
  std::string diagnostic;  // why an invalid judgment scored 0
  std::vector<corpus::CriticalFailure> failures;
};

/// 1 for a no_failure judgment; an invalid judgment scores 0 with a diagnostic.
JudgeReward judge_reward(const corpus::ProcedureInstance& inst, std::string_view answer,
                         gateway::ModelGateway& gateway, const util::PromptLibrary& prompts,
                         const scoring::JudgeConfig& judge);

struct RewardWeights {
  double judge = 1.0;
  double format = 1.0;
  double length = 1.0;
};

struct RewardConfig {
  LengthRewardConfig length;
  RewardWeights weights;
  std::string token_scheme = "whitespace";
  scoring::JudgeConfig judge;
};

struct RewardRequest {
  std::string answer_text;
  std::optional<std::size_t> expected_n;
  std::optional<std::int64_t> gen_tokens;
  std::optional<std::int64_t> ref_tokens;
};

struct RewardBreakdown {
  int judge = 0;
  int format = 0;
  double length = 0.0;
  double total = 0.0;
  std::int64_t gen_tokens = 0;
  std::int64_t ref_tokens = 0;
  // "caller" or the tokenization scheme that produced each count.
  std::string gen_token_source;
  std::string ref_token_source;
  bool judge_valid = true;
  std::string diagnostic;
  std::vector<corpus::CriticalFailure> failures;

  nlohmann::ordered_json to_json() const;
};

/// Computes all three components. Missing token counts are measured over the
/// parsed answer steps and the reference steps with cfg.token_scheme.
RewardBreakdown total_reward(const corpus::ProcedureInstance& inst, const RewardRequest& request,
                             gateway::ModelGateway& gateway, const util::PromptLibrary& prompts,
                             const corpus::TokenizerRegistry& tokenizers, const RewardConfig& cfg);

}  // namespace how2::rewards

#include "how2/rewards/reward.hpp"

#include <cmath>

#include "how2/corpus/jsonl.hpp"
#include "how2/corpus/numbered_list.hpp"
#include "how2/corpus/tokenizer.hpp"
#include "how2/inference/harness.hpp"
#include "how2/util/error.hpp"

namespace how2::rewards {

void LengthRewardConfig::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("length reward tau must lie in (0, 1)");
  if (!(alpha > 0.0)) throw ConfigError("length reward alpha must be > 0");
}

int format_reward(std::string_view answer, std::optional<std::size_t> expected_n) {
  const auto list = corpus::final_numbered_list(answer);
  if (list.items.empty() || !list.consecutive) return 0;
  if (expected_n && list.items.size() != *expected_n) return 0;
  return 1;
}

double length_reward_for_ratio(double ratio, const LengthRewardConfig& cfg) {
  const double dev = std::fabs(ratio - 1.0);
  if (dev <= cfg.tau) return 1.0;
  return std::exp(-cfg.alpha * (dev - cfg.tau) / (1.0 - cfg.tau));
}

double length_reward(std::int64_t gen_tokens, std::int64_t ref_tokens, const LengthRewardConfig& cfg) {
  if (ref_tokens <= 0) throw UndefinedError("length ratio is undefined when the reference has no tokens");
  if (gen_tokens < 0) throw ValidationError("gen_tokens must be >= 0");
  return length_reward_for_ratio(static_cast<double>(gen_tokens) / static_cast<double>(ref_tokens), cfg);
}

JudgeReward judge_reward(const corpus::ProcedureInstance& inst, std::string_view answer,
                         gateway::ModelGateway& gateway, const util::PromptLibrary& prompts,
                         const scoring::JudgeConfig& judge) {
  corpus::GenerationRecord gen;
  gen.instance_id = inst.id;
  gen.model_id = "rollout";
  gen.raw_text = std::string(answer);
  gen.steps = inference::parse_generation(answer);
  const auto j = scoring::judge_example(inst, gen, gateway, prompts, judge);
  JudgeReward out;
  out.valid = j.valid;
  if (!j.valid) {
    out.reward = 0;
    out.diagnostic = "invalid judgment: " + j.error;
    return out;
  }
  out.failures = j.failures;
  out.reward = j.binary() == corpus::Verdict::no_failure ? 1 : 0;
  return out;
}

nlohmann::ordered_json RewardBreakdown::to_json() const {
  auto fails = nlohmann::ordered_json::array();
  for (const auto& f : failures) fails.push_back(corpus::to_json(f));
  return {{"judge", judge},
          {"format", format},
          {"length", length},
          {"total", total},
          {"gen_tokens", gen_tokens},
          {"ref_tokens", ref_tokens},
          {"token_source", {{"gen", gen_token_source}, {"ref", ref_token_source}}},
          {"judge_valid", judge_valid},
          {"diagnostic", diagnostic},
          {"failures", std::move(fails)}};
}

RewardBreakdown total_reward(const corpus::ProcedureInstance& inst, const RewardRequest& request,
                             gateway::ModelGateway& gateway, const util::PromptLibrary& prompts,
                             const corpus::TokenizerRegistry& tokenizers, const RewardConfig& cfg) {
  cfg.length.validate();
  RewardBreakdown b;
  if (request.gen_tokens) {
    b.gen_tokens = *request.gen_tokens;
    b.gen_token_source = "caller";
  } else {
    b.gen_tokens = static_cast<std::int64_t>(
        corpus::count_step_tokens(inference::parse_generation(request.answer_text), tokenizers, cfg.token_scheme));
    b.gen_token_source = cfg.token_scheme;
  }
  if (request.ref_tokens) {
    b.ref_tokens = *request.ref_tokens;
    b.ref_token_source = "caller";
  } else {
    b.ref_tokens = static_cast<std::int64_t>(corpus::count_step_tokens(inst.steps, tokenizers, cfg.token_scheme));
    b.ref_token_source = cfg.token_scheme;
  }
  b.length = length_reward(b.gen_tokens, b.ref_tokens, cfg.length);
  b.format = format_reward(request.answer_text, request.expected_n);

  auto jr = judge_reward(inst, request.answer_text, gateway, prompts, cfg.judge);
  b.judge = jr.reward;
  b.judge_valid = jr.valid;
  b.diagnostic = std::move(jr.diagnostic);
  b.failures = std::move(jr.failures);

  b.total = cfg.weights.judge * b.judge + cfg.weights.format * b.format + cfg.weights.length * b.length;
  return b;
}

}  // namespace how2::rewards

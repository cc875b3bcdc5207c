#include "how2/scoring/perplexity.hpp"

#include <cmath>

#include "how2/corpus/numbered_list.hpp"
#include "how2/util/error.hpp"

namespace how2::scoring {

double conditional_perplexity(const std::vector<double>& logprobs) {
  if (logprobs.empty()) throw UndefinedError("perplexity is undefined for an empty token sequence");
  long double sum = 0.0L;
  for (double lp : logprobs) sum += lp;
  return static_cast<double>(std::exp(-sum / static_cast<long double>(logprobs.size())));
}

double conditional_perplexity(const std::vector<gateway::TokenLogprob>& tokens) {
  std::vector<double> lps;
  lps.reserve(tokens.size());
  for (const auto& t : tokens) lps.push_back(t.logprob);
  return conditional_perplexity(lps);
}

double reference_step_perplexity(const corpus::ProcedureInstance& inst, gateway::ModelGateway& gateway,
                                 const util::PromptLibrary& prompts, const std::vector<inference::Exemplar>& shots) {
  const auto prompt = inference::build_prompt(inst, corpus::PromptVariant::base, shots, prompts);
  return conditional_perplexity(gateway.score_continuation(prompt, corpus::render_numbered(inst.steps)));
}

}  // namespace how2::scoring

#pragma once

#include <string>
#include <vector>

#include "how2/corpus/records.hpp"
#include "how2/gateway/gateway.hpp"
#include "how2/inference/harness.hpp"

namespace how2::scoring {

/// exp(-mean logprob), natural log. Throws UndefinedError for an empty sequence.
double conditional_perplexity(const std::vector<double>& logprobs);
double conditional_perplexity(const std::vector<gateway::TokenLogprob>& tokens);

/// Teacher-forced perplexity of the numbered reference steps, conditioned on
/// the base-variant generation prompt for the instance.
double reference_step_perplexity(const corpus::ProcedureInstance& inst, gateway::ModelGateway& gateway,
                                 const util::PromptLibrary& prompts, const std::vector<inference::Exemplar>& shots);

}  // namespace how2::scoring

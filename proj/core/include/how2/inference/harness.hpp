#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "how2/corpus/records.hpp"
#include "how2/gateway/gateway.hpp"

namespace how2::corpus {
class TokenizerRegistry;
}
namespace how2::util {
class PromptLibrary;
}

namespace how2::inference {

struct DecodingPolicy {
  corpus::PromptVariant kind = corpus::PromptVariant::instruct;
  double temperature = 0.0;
  std::vector<std::string> stop_sequences;
  std::optional<int> max_tokens;
  std::optional<std::int64_t> seed;

  /// base and instruct: greedy with stop "\n\n"; reasoning: temperature 0.6, no stop.
  static DecodingPolicy for_variant(corpus::PromptVariant kind, std::optional<int> max_tokens = std::nullopt);

  gateway::DecodingParams params() const;
};

struct Exemplar {
  std::string goal;
  std::vector<std::string> resources;
  std::vector<std::string> steps;
};

/// Reads a JSON array of {goal, resources, steps}.
std::vector<Exemplar> load_exemplars(const std::filesystem::path& path);

/// HOW2_DATA_DIR/exemplars.json, falling back to the source tree's data/.
std::filesystem::path default_exemplars_path();

inline constexpr std::size_t kShotCount = 3;

/// Shared body (instructions, the shots, the query) followed by the
/// variant's suffix template. Reasoning endpoints use the instruct suffix.
/// Throws ValidationError unless exactly three shots are given.
std::string build_prompt(const corpus::ProcedureInstance& inst, corpus::PromptVariant variant,
                         const std::vector<Exemplar>& shots, const util::PromptLibrary& prompts);

/// Steps of the final consecutive numbered list; empty when there is none.
std::vector<std::string> parse_generation(std::string_view raw);

struct GenerationConfig {
  std::string model_id;
  corpus::PromptVariant variant = corpus::PromptVariant::instruct;
  std::string token_scheme = "whitespace";
  std::optional<int> max_tokens;
  std::optional<std::int64_t> seed;
  std::size_t max_workers = 0;  // 0: the gateway's max_in_flight
};

/// One record per instance, in input order. Gateway failures produce a
/// record with failed = true and the run continues.
std::vector<corpus::GenerationRecord> run_generation(const std::vector<corpus::ProcedureInstance>& split,
                                                     gateway::ModelGateway& gateway,
                                                     const util::PromptLibrary& prompts,
                                                     const std::vector<Exemplar>& shots,
                                                     const corpus::TokenizerRegistry& tokenizers,
                                                     const GenerationConfig& config);

}  // namespace how2::inference

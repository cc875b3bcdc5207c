#include "how2/inference/harness.hpp"

#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>

#include "how2/corpus/numbered_list.hpp"
#include "how2/corpus/tokenizer.hpp"
#include "how2/util/error.hpp"
#include "how2/util/parallel.hpp"
#include "how2/util/prompt_library.hpp"
#include "how2/util/text.hpp"

#ifndef HOW2_DEFAULT_DATA_DIR
#define HOW2_DEFAULT_DATA_DIR "data"
#endif

namespace how2::inference {

using corpus::PromptVariant;

DecodingPolicy DecodingPolicy::for_variant(PromptVariant kind, std::optional<int> max_tokens) {
  DecodingPolicy p;
  p.kind = kind;
  p.max_tokens = max_tokens;
  if (kind == PromptVariant::reasoning) {
    p.temperature = 0.6;
  } else {
    p.temperature = 0.0;
    p.stop_sequences = {"\n\n"};
  }
  return p;
}

gateway::DecodingParams DecodingPolicy::params() const {
  return gateway::DecodingParams{temperature, stop_sequences, max_tokens, seed};
}

std::vector<Exemplar> load_exemplars(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read exemplar file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("exemplar file " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!doc.is_array()) throw ConfigError("exemplar file must hold a JSON array");
  std::vector<Exemplar> out;
  for (const auto& e : doc) {
    try {
      out.push_back(Exemplar{e.at("goal").get<std::string>(), e.value("resources", std::vector<std::string>{}),
                             e.at("steps").get<std::vector<std::string>>()});
    } catch (const nlohmann::json::exception& ex) {
      throw ConfigError(std::string("malformed exemplar: ") + ex.what());
    }
  }
  return out;
}

std::filesystem::path default_exemplars_path() {
  const char* env = std::getenv("HOW2_DATA_DIR");
  return std::filesystem::path(env ? env : HOW2_DEFAULT_DATA_DIR) / "exemplars.json";
}

namespace {

std::string resource_line(const std::vector<std::string>& resources) {
  return resources.empty() ? std::string("none") : util::join(resources, "; ");
}

std::string render_shot(const Exemplar& shot) {
  std::string out = "Goal: " + shot.goal + "\n";
  out += "Resources: " + resource_line(shot.resources) + "\n";
  out += "Number of steps: " + std::to_string(shot.steps.size()) + "\n";
  out += "Steps:\n" + corpus::render_numbered(shot.steps);
  return out;
}

}  // namespace

std::string build_prompt(const corpus::ProcedureInstance& inst, PromptVariant variant,
                         const std::vector<Exemplar>& shots, const util::PromptLibrary& prompts) {
  if (shots.size() != kShotCount) {
    throw ValidationError("generation prompts need exactly 3 exemplars, got " + std::to_string(shots.size()));
  }
  std::string examples;
  for (std::size_t i = 0; i < shots.size(); ++i) {
    if (i) examples += "\n\n";
    examples += "Example " + std::to_string(i + 1) + "\n" + render_shot(shots[i]);
  }
  const std::map<std::string, std::string> values{{"examples", examples},
                                                  {"goal", inst.goal},
                                                  {"resources", resource_line(inst.resources)},
                                                  {"n", std::to_string(inst.steps.size())}};
  const char* suffix = variant == PromptVariant::base ? "generation_base" : "generation_inst";
  return prompts.render("generation_common", values) + prompts.render(suffix, values);
}

std::vector<std::string> parse_generation(std::string_view raw) { return corpus::final_numbered_list(raw).items; }

std::vector<corpus::GenerationRecord> run_generation(const std::vector<corpus::ProcedureInstance>& split,
                                                     gateway::ModelGateway& gateway,
                                                     const util::PromptLibrary& prompts,
                                                     const std::vector<Exemplar>& shots,
                                                     const corpus::TokenizerRegistry& tokenizers,
                                                     const GenerationConfig& config) {
  // Resolve the scheme up front so a typo fails the run, not every record.
  (void)tokenizers.get(config.token_scheme);
  auto policy = DecodingPolicy::for_variant(config.variant, config.max_tokens);
  policy.seed = config.seed;
  const auto params = policy.params();

  std::vector<corpus::GenerationRecord> out(split.size());
  const auto workers = config.max_workers ? config.max_workers : gateway.config().max_in_flight;
  util::parallel_for(split.size(), workers, [&](std::size_t i) {
    const auto& inst = split[i];
    auto& rec = out[i];
    rec.instance_id = inst.id;
    rec.model_id = config.model_id;
    rec.prompt_variant = config.variant;
    rec.ref_tokens = static_cast<std::int64_t>(corpus::count_step_tokens(inst.steps, tokenizers, config.token_scheme));
    const auto prompt = build_prompt(inst, config.variant, shots, prompts);
    try {
      rec.raw_text = gateway.complete(prompt, params).response_text;
    } catch (const Error& e) {
      if (e.category() != ErrorCategory::gateway && e.category() != ErrorCategory::protocol) throw;
      rec.failed = true;
      rec.error = e.what();
      return;
    }
    rec.steps = parse_generation(rec.raw_text);
    rec.gen_tokens = static_cast<std::int64_t>(corpus::count_step_tokens(rec.steps, tokenizers, config.token_scheme));
  });
  return out;
}

}  // namespace how2::inference

#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "how2/corpus/jsonl.hpp"
#include "how2/corpus/tokenizer.hpp"

namespace {

using namespace how2::corpus;

std::string sample_text(std::size_t words, std::uint64_t seed) {
  static const std::vector<std::string> vocab = {"Preheat", "the", "oven", "to", "180°C", "and", "whisk",
                                                 "eggs,", "sugar", "flour.", "Don't", "over-mix", "2½",
                                                 "cups", "\"gently\"", "until", "smooth;", "then", "bake"};
  std::mt19937_64 rng(seed);
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) out += ' ';
    out += vocab[rng() % vocab.size()];
  }
  return out;
}

ProcedureInstance sample_instance(int i) {
  ProcedureInstance inst;
  inst.id = "bench-" + std::to_string(i);
  inst.topic = all_topics()[static_cast<std::size_t>(i) % all_topics().size()];
  inst.goal = sample_text(8, static_cast<std::uint64_t>(i));
  for (int s = 0; s < 8; ++s) inst.steps.push_back(sample_text(14, static_cast<std::uint64_t>(i * 31 + s)));
  inst.resources = {"bowl", "whisk"};
  inst.provenance = {{"source", "bench"}};
  return inst;
}

void BM_BpeCount(benchmark::State& state) {
  const auto bpe = ByteLevelBpe::from_tokenizer_json(std::string(HOW2_BENCH_DATA_DIR) + "/tokenizers/demo_bpe.json");
  const auto text = sample_text(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(bpe->count(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_BpeCount)->Arg(64)->Arg(512)->Arg(4096);

void BM_WhitespaceCount(benchmark::State& state) {
  const WhitespaceCounter ws;
  const auto text = sample_text(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(ws.count(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_WhitespaceCount)->Arg(512)->Arg(4096);

void BM_InstanceSerialize(benchmark::State& state) {
  const auto inst = sample_instance(3);
  for (auto _ : state) benchmark::DoNotOptimize(serialize(inst));
}
BENCHMARK(BM_InstanceSerialize);

void BM_InstanceParse(benchmark::State& state) {
  const auto line = serialize(sample_instance(5));
  for (auto _ : state) benchmark::DoNotOptimize(parse_instance(line));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * line.size()));
}
BENCHMARK(BM_InstanceParse);

}  // namespace

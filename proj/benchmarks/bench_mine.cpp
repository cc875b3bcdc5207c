#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "how2/mine/heuristics.hpp"

namespace {

using namespace how2::mine;

std::vector<std::string> steps(std::size_t n, std::size_t words, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> out;
  for (std::size_t s = 0; s < n; ++s) {
    std::string step;
    for (std::size_t w = 0; w < words; ++w) {
      if (w) step += ' ';
      step += "Word" + std::to_string(rng() % 60) + (w + 1 == words ? "." : ",");
    }
    out.push_back(std::move(step));
  }
  return out;
}

void BM_NormalizeStep(benchmark::State& state) {
  const std::string step = "Whisk the EGGS — gently!  Then, (carefully) fold in ½ cup of “sifted” flour...";
  for (auto _ : state) benchmark::DoNotOptimize(normalize_step(step));
}
BENCHMARK(BM_NormalizeStep);

void BM_RepetitionRate(benchmark::State& state) {
  const auto pool = steps(static_cast<std::size_t>(state.range(0)), 16, 7);
  for (auto _ : state) benchmark::DoNotOptimize(pooled_repetition_rate(pool, 3));
}
BENCHMARK(BM_RepetitionRate)->Arg(5)->Arg(15)->Arg(100);

void BM_HeuristicFilter(benchmark::State& state) {
  const auto pool = steps(10, 16, 11);
  const HeuristicsConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(heuristic_filter(pool, cfg));
}
BENCHMARK(BM_HeuristicFilter);

}  // namespace

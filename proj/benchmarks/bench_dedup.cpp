#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "how2/bench/dedup.hpp"
#include "how2/bench/sampling.hpp"
#include "how2/corpus/topic.hpp"

namespace {

using namespace how2;

std::vector<bench::Vector> unit_vectors(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<bench::Vector> out(n, bench::Vector(dim));
  for (auto& v : out) {
    double norm = 0.0;
    for (auto& x : v) {
      x = normal(rng);
      norm += x * x;
    }
    for (auto& x : v) x /= std::sqrt(norm);
  }
  return out;
}

std::vector<std::string> ids(const char* prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

void BM_NearestTrain(benchmark::State& state) {
  const auto n_eval = static_cast<std::size_t>(state.range(0));
  const auto n_train = static_cast<std::size_t>(state.range(1));
  const auto workers = static_cast<std::size_t>(state.range(2));
  const auto eval = unit_vectors(n_eval, 256, 1);
  const auto train = unit_vectors(n_train, 256, 2);
  const auto eval_ids = ids("e", n_eval);
  const auto train_ids = ids("t", n_train);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bench::nearest_train_similarity(eval_ids, eval, train_ids, train, workers));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n_eval * n_train));
}
BENCHMARK(BM_NearestTrain)->Args({100, 1000, 1})->Args({100, 10000, 1})->Args({100, 10000, 4})->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_SampleBalanced(benchmark::State& state) {
  std::vector<corpus::ProcedureInstance> pool;
  const auto n = static_cast<std::size_t>(state.range(0));
  for (std::size_t i = 0; i < n; ++i) {
    corpus::ProcedureInstance inst;
    inst.id = "i" + std::to_string(i);
    inst.topic = corpus::all_topics()[i % corpus::all_topics().size()];
    pool.push_back(std::move(inst));
  }
  for (auto _ : state) benchmark::DoNotOptimize(bench::sample_balanced(pool, 500, 17));
}
BENCHMARK(BM_SampleBalanced)->Arg(20000)->Unit(benchmark::kMillisecond);

}  // namespace

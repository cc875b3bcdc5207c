#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "how2/agreement/agreement.hpp"
#include "how2/analysis/rank.hpp"
#include "how2/analysis/regression.hpp"
#include "how2/corpus/topic.hpp"

namespace {

using namespace how2;

agreement::LabelMatrix labels(std::size_t items, std::size_t raters, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  agreement::LabelMatrix m;
  for (std::size_t i = 0; i < items; ++i) {
    const int truth = static_cast<int>(rng() % 2);
    auto& row = m.cells.emplace_back();
    for (std::size_t r = 0; r < raters; ++r) {
      if (rng() % 10 == 0) {
        row.emplace_back(std::nullopt);
      } else {
        row.emplace_back(rng() % 5 == 0 ? 1 - truth : truth);
      }
    }
  }
  return m;
}

void BM_KrippendorffAlpha(benchmark::State& state) {
  const auto m = labels(static_cast<std::size_t>(state.range(0)), 3, 5);
  for (auto _ : state) benchmark::DoNotOptimize(agreement::krippendorff_alpha(m));
}
BENCHMARK(BM_KrippendorffAlpha)->Arg(100)->Arg(10000);

void BM_LeaveOneOut(benchmark::State& state) {
  const auto m = labels(static_cast<std::size_t>(state.range(0)), 5, 6);
  for (auto _ : state) benchmark::DoNotOptimize(agreement::leave_one_out(m));
}
BENCHMARK(BM_LeaveOneOut)->Arg(1000);

std::vector<analysis::RegressionExample> examples(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit;
  std::vector<analysis::RegressionExample> out;
  const auto& topics = corpus::all_topics();
  for (std::size_t i = 0; i < n; ++i) {
    analysis::RegressionExample ex;
    ex.steps = 5.0 + static_cast<double>(rng() % 11);
    ex.resources = static_cast<double>(rng() % 8);
    ex.ratio = 50.0 + 100.0 * unit(rng);
    ex.topic = topics[rng() % topics.size()];
    const double eta = 1.0 - 0.12 * ex.steps + 0.05 * ex.resources - 0.004 * *ex.ratio;
    ex.no_failure = unit(rng) < 1.0 / (1.0 + std::exp(-eta));
    out.push_back(ex);
  }
  return out;
}

void BM_LogisticFit(benchmark::State& state) {
  const auto data = examples(static_cast<std::size_t>(state.range(0)), 9);
  for (auto _ : state) benchmark::DoNotOptimize(analysis::fit_logistic(data));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_LogisticFit)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_RankCheckpoints(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit;
  std::vector<analysis::CheckpointRecord> records;
  for (int i = 0; i < state.range(0); ++i) records.push_back({"c" + std::to_string(i), unit(rng), 1.0 + unit(rng)});
  for (auto _ : state) benchmark::DoNotOptimize(analysis::rank_checkpoints(records));
}
BENCHMARK(BM_RankCheckpoints)->Arg(20)->Arg(1000);

}  // namespace

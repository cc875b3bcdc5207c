#include "how2/bench/sampling.hpp"

#include <algorithm>
#include <array>
#include <limits>

namespace how2::bench {

std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound == std::numeric_limits<std::uint64_t>::max()) return rng();
  const std::uint64_t range = bound + 1;
  // Largest multiple of range that fits; draws at or above it are rejected.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % range);
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % range;
}

BenchmarkSplit sample_balanced(const std::vector<corpus::ProcedureInstance>& instances, std::size_t per_topic,
                               std::uint64_t seed) {
  std::array<std::vector<std::size_t>, corpus::kTopicCount> by_topic;
  for (std::size_t i = 0; i < instances.size(); ++i) by_topic[corpus::topic_index(instances[i].topic)].push_back(i);

  std::mt19937_64 rng(seed);
  std::vector<bool> selected(instances.size(), false);
  BenchmarkSplit split;
  for (auto& indices : by_topic) {
    std::stable_sort(indices.begin(), indices.end(),
                     [&](std::size_t a, std::size_t b) { return instances[a].id < instances[b].id; });
    seeded_shuffle(indices, rng);
    const auto take = std::min(per_topic, indices.size());
    for (std::size_t k = 0; k < take; ++k) {
      selected[indices[k]] = true;
      split.benchmark.push_back(instances[indices[k]]);
    }
  }
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (!selected[i]) split.training_pool.push_back(instances[i]);
  }
  return split;
}

}  // namespace how2::bench

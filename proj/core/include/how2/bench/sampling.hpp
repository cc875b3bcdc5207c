#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "how2/corpus/records.hpp"

namespace how2::bench {

struct BenchmarkSplit {
  std::vector<corpus::ProcedureInstance> benchmark;  // grouped by topic, in draw order
  std::vector<corpus::ProcedureInstance> training_pool;  // remaining instances, input order
};

inline constexpr std::size_t kDefaultPerTopic = 500;

/// Uniform integer in [0, bound] without modulo bias.
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound);

/// Fisher-Yates shuffle (from the back) driven by bounded_draw.
template <typename T>
void seeded_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(bounded_draw(rng, i - 1));
    std::swap(items[i - 1], items[j]);
  }
}

/// For each topic in enum order: sort that topic's instances by id, shuffle
/// with one mt19937_64 seeded once, keep the first `per_topic`.
BenchmarkSplit sample_balanced(const std::vector<corpus::ProcedureInstance>& instances, std::size_t per_topic,
                               std::uint64_t seed);

}  // namespace how2::bench

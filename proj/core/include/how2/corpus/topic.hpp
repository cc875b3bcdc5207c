#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace how2::corpus {

// The 14 document topics, in lexicographic order of their display names.
enum class Topic : std::uint8_t {
  art_design,
  crime_law,
  education_jobs,
  electronics_hardware,
  fashion_beauty,
  food_dining,
  health,
  home_hobbies,
  industrial,
  religion,
  science_math_technology,
  sports_fitness,
  transportation,
  travel_tourism,
};

inline constexpr std::size_t kTopicCount = 14;

std::string_view topic_name(Topic topic) noexcept;

/// Exact display-name match ("Food & Dining"). Throws DomainError otherwise.
Topic parse_topic(std::string_view name);

const std::array<Topic, kTopicCount>& all_topics() noexcept;

constexpr std::size_t topic_index(Topic topic) noexcept { return static_cast<std::size_t>(topic); }

}  // namespace how2::corpus

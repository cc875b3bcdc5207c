#include "how2/corpus/topic.hpp"

#include <string>

#include "how2/util/error.hpp"

namespace how2::corpus {
namespace {

constexpr std::array<std::string_view, kTopicCount> kNames = {
    "Art & Design",
    "Crime & Law",
    "Education & Jobs",
    "Electronics & Hardware",
    "Fashion & Beauty",
    "Food & Dining",
    "Health",
    "Home & Hobbies",
    "Industrial",
    "Religion",
    "Science, Math & Technology",
    "Sports & Fitness",
    "Transportation",
    "Travel & Tourism",
};

constexpr std::array<Topic, kTopicCount> make_all() {
  std::array<Topic, kTopicCount> out{};
  for (std::size_t i = 0; i < kTopicCount; ++i) out[i] = static_cast<Topic>(i);
  return out;
}

constexpr auto kAll = make_all();

}  // namespace

std::string_view topic_name(Topic topic) noexcept { return kNames[topic_index(topic)]; }

Topic parse_topic(std::string_view name) {
  for (std::size_t i = 0; i < kTopicCount; ++i) {
    if (kNames[i] == name) return static_cast<Topic>(i);
  }
  throw DomainError("unknown topic label '" + std::string(name) + "'");
}

const std::array<Topic, kTopicCount>& all_topics() noexcept { return kAll; }

}  // namespace how2::corpus

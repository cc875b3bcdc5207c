#include "how2/scoring/score.hpp"

#include <string>
#include <unordered_map>

#include "how2/util/error.hpp"

namespace how2::scoring {

nlohmann::ordered_json ScoreSummary::to_json() const {
  nlohmann::ordered_json topics = nlohmann::ordered_json::object();
  for (const auto& [topic, s] : per_topic) {
    topics[std::string(corpus::topic_name(topic))] = {
        {"n_examples", s.n_examples}, {"n_no_failure", s.n_no_failure}, {"rate", s.rate}};
  }
  nlohmann::ordered_json j = {{"overall", overall},
                              {"n_examples", n_examples},
                              {"n_no_failure", n_no_failure},
                              {"n_invalid", n_invalid},
                              {"per_topic", std::move(topics)}};
  j["avg_gen_tokens"] = avg_gen_tokens ? nlohmann::ordered_json(*avg_gen_tokens) : nlohmann::ordered_json(nullptr);
  j["avg_gen_ref_ratio"] = avg_gen_ref_ratio ? nlohmann::ordered_json(*avg_gen_ref_ratio) : nlohmann::ordered_json(nullptr);
  return j;
}

ScoreSummary score(const std::vector<corpus::JudgmentRecord>& judgments,
                   const std::vector<corpus::GenerationRecord>* gens) {
  ScoreSummary s;
  for (const auto& j : judgments) {
    if (!j.valid) {
      ++s.n_invalid;
      continue;
    }
    auto& t = s.per_topic[j.topic];
    ++t.n_examples;
    ++s.n_examples;
    if (j.binary() == corpus::Verdict::no_failure) {
      ++t.n_no_failure;
      ++s.n_no_failure;
    }
  }
  if (s.n_examples == 0) throw UndefinedError("score is undefined without valid judgments");
  s.overall = static_cast<double>(s.n_no_failure) / static_cast<double>(s.n_examples);
  for (auto& [topic, t] : s.per_topic) t.rate = static_cast<double>(t.n_no_failure) / static_cast<double>(t.n_examples);

  if (gens) {
    std::unordered_map<std::string, const corpus::GenerationRecord*> by_id;
    for (const auto& g : *gens) by_id.emplace(g.generation_id(), &g);
    double tokens = 0.0, ratio = 0.0;
    std::size_t n_tokens = 0, n_ratio = 0;
    for (const auto& j : judgments) {
      if (!j.valid) continue;
      const auto it = by_id.find(j.generation_id);
      if (it == by_id.end()) continue;
      tokens += static_cast<double>(it->second->gen_tokens);
      ++n_tokens;
      if (it->second->ref_tokens > 0) {
        ratio += static_cast<double>(it->second->gen_tokens) / static_cast<double>(it->second->ref_tokens);
        ++n_ratio;
      }
    }
    if (n_tokens) s.avg_gen_tokens = tokens / static_cast<double>(n_tokens);
    if (n_ratio) s.avg_gen_ref_ratio = ratio / static_cast<double>(n_ratio);
  }
  return s;
}

namespace {

std::string pair_key(const corpus::JudgmentRecord& j) { return j.instance_id + '\x1f' + j.generation_id; }

}  // namespace

ConsistencyResult consistency_filter(const std::vector<corpus::JudgmentRecord>& run_a,
                                     const std::vector<corpus::JudgmentRecord>& run_b) {
  if (run_a.size() != run_b.size()) {
    throw AlignmentError("judging runs differ in length (" + std::to_string(run_a.size()) + " vs " +
                         std::to_string(run_b.size()) + ")");
  }
  std::unordered_map<std::string, const corpus::JudgmentRecord*> b_by_key;
  for (const auto& j : run_b) {
    if (!b_by_key.emplace(pair_key(j), &j).second) {
      throw AlignmentError("run B repeats (" + j.instance_id + ", " + j.generation_id + ")");
    }
  }
  ConsistencyResult out;
  std::unordered_map<std::string, bool> seen;
  for (const auto& a : run_a) {
    const auto key = pair_key(a);
    if (!seen.emplace(key, true).second) throw AlignmentError("run A repeats (" + a.instance_id + ", " + a.generation_id + ")");
    const auto it = b_by_key.find(key);
    if (it == b_by_key.end()) throw AlignmentError("(" + a.instance_id + ", " + a.generation_id + ") missing from run B");
    const auto& b = *it->second;
    if (a.valid && b.valid && a.binary() == b.binary()) {
      out.retained.emplace_back(a, b);
    } else {
      ++out.dropped;
    }
  }
  return out;
}

}  // namespace how2::scoring

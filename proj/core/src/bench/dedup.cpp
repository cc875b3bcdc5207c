#include "how2/bench/dedup.hpp"

#include <limits>

#include "how2/corpus/numbered_list.hpp"
#include "how2/gateway/gateway.hpp"
#include "how2/util/error.hpp"
#include "how2/util/parallel.hpp"

namespace how2::bench {

std::string instance_embedding_text(const corpus::ProcedureInstance& inst) {
  std::string out = inst.goal;
  if (!inst.steps.empty()) out += "\n" + corpus::render_numbered(inst.steps);
  return out;
}

nlohmann::ordered_json to_json(const SimilarityEntry& entry) {
  return {{"candidate_id", entry.candidate_id},
          {"nearest_train_id", entry.nearest_train_id},
          {"cosine", entry.cosine}};
}

SimilarityEntry similarity_from_json(const nlohmann::json& j) {
  try {
    return SimilarityEntry{j.at("candidate_id").get<std::string>(), j.at("nearest_train_id").get<std::string>(),
                           j.at("cosine").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed similarity record: ") + e.what());
  }
}

SimilarityReport nearest_train_similarity(const std::vector<std::string>& eval_ids, const std::vector<Vector>& eval_vecs,
                                          const std::vector<std::string>& train_ids,
                                          const std::vector<Vector>& train_vecs, std::size_t max_workers) {
  if (eval_ids.size() != eval_vecs.size() || train_ids.size() != train_vecs.size()) {
    throw ValidationError("id and vector counts differ");
  }
  if (train_vecs.empty()) throw ValidationError("nearest-neighbour search needs a non-empty train set");
  const auto dim = train_vecs.front().size();
  for (const auto& v : train_vecs) {
    if (v.size() != dim) throw ValidationError("train vectors have mixed dimensions");
  }
  for (const auto& v : eval_vecs) {
    if (v.size() != dim) throw ValidationError("eval vector dimension differs from train dimension");
  }

  SimilarityReport report(eval_vecs.size());
  util::parallel_for(eval_vecs.size(), max_workers, [&](std::size_t i) {
    const auto& q = eval_vecs[i];
    std::size_t best = 0;
    double best_dot = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < train_vecs.size(); ++t) {
      double dot = 0.0;
      for (std::size_t d = 0; d < dim; ++d) dot += q[d] * train_vecs[t][d];
      if (dot > best_dot || (dot == best_dot && train_ids[t] < train_ids[best])) {
        best_dot = dot;
        best = t;
      }
    }
    report[i] = SimilarityEntry{eval_ids[i], train_ids[best], best_dot};
  });
  return report;
}

std::vector<std::string> dedup_filter(const SimilarityReport& report, double threshold) {
  std::vector<std::string> kept;
  for (const auto& entry : report) {
    if (entry.cosine <= threshold) kept.push_back(entry.candidate_id);
  }
  return kept;
}

std::vector<Vector> embed_instances(gateway::ModelGateway& gateway,
                                    const std::vector<corpus::ProcedureInstance>& instances) {
  if (instances.empty()) return {};
  std::vector<std::string> texts;
  texts.reserve(instances.size());
  for (const auto& inst : instances) texts.push_back(instance_embedding_text(inst));
  return gateway.embed(texts);
}

}  // namespace how2::bench

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "how2/corpus/records.hpp"

namespace how2::gateway {
class ModelGateway;
}

namespace how2::bench {

using Vector = std::vector<double>;

/// Goal on the first line, then "k. <step>" lines. Resources are not included.
std::string instance_embedding_text(const corpus::ProcedureInstance& inst);

struct SimilarityEntry {
  std::string candidate_id;
  std::string nearest_train_id;
  double cosine = 0.0;

  bool operator==(const SimilarityEntry&) const = default;
};

using SimilarityReport = std::vector<SimilarityEntry>;

nlohmann::ordered_json to_json(const SimilarityEntry& entry);
SimilarityEntry similarity_from_json(const nlohmann::json& j);

/// Exact nearest neighbour by dot product. Vectors are assumed unit-norm.
/// Ties go to the lexicographically lowest train id. Throws ValidationError
/// on mismatched dimensions or id/vector counts, or an empty train set.
SimilarityReport nearest_train_similarity(const std::vector<std::string>& eval_ids, const std::vector<Vector>& eval_vecs,
                                          const std::vector<std::string>& train_ids,
                                          const std::vector<Vector>& train_vecs, std::size_t max_workers = 1);

inline constexpr double kDefaultDedupThreshold = 0.65;

/// Ids whose nearest-train cosine does not exceed `threshold`, in report order.
std::vector<std::string> dedup_filter(const SimilarityReport& report, double threshold = kDefaultDedupThreshold);

/// Embeds each instance's embedding text through the gateway.
std::vector<Vector> embed_instances(gateway::ModelGateway& gateway, const std::vector<corpus::ProcedureInstance>& instances);

}  // namespace how2::bench

#pragma once

#include <string>
#include <vector>

namespace how2::analysis {

/// 1-based ranks, ascending; tied values share their average rank.
std::vector<double> average_ranks(const std::vector<double>& xs);

/// Pearson correlation of average ranks. Throws AlignmentError on a length
/// mismatch, ValidationError below two points, UndefinedError for a
/// constant sequence.
double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

struct CheckpointRecord {
  std::string checkpoint;
  double score = 0.0;
  double ppl = 0.0;
};

struct CheckpointRanking {
  std::vector<std::string> checkpoints;
  std::vector<double> score_rank;  // 1 = highest score
  std::vector<double> ppl_rank;    // 1 = lowest perplexity
  double rho = 0.0;
};

CheckpointRanking rank_checkpoints(const std::vector<CheckpointRecord>& records);

}  // namespace how2::analysis

#include "how2/analysis/rank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "how2/util/error.hpp"

namespace how2::analysis {

std::vector<double> average_ranks(const std::vector<double>& xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw AlignmentError("spearman inputs differ in length");
  if (xs.size() < 2) throw ValidationError("spearman needs at least two points");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedError("spearman is undefined for a constant sequence");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CheckpointRanking rank_checkpoints(const std::vector<CheckpointRecord>& records) {
  if (records.size() < 2) throw ValidationError("ranking needs at least two checkpoints");
  CheckpointRanking out;
  std::vector<double> neg_score, ppl;
  for (const auto& r : records) {
    out.checkpoints.push_back(r.checkpoint);
    neg_score.push_back(-r.score);
    ppl.push_back(r.ppl);
  }
  out.score_rank = average_ranks(neg_score);
  out.ppl_rank = average_ranks(ppl);
  out.rho = spearman(out.score_rank, out.ppl_rank);
  return out;
}

}  // namespace how2::analysis

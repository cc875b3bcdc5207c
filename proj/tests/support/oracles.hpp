#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "how2/agreement/agreement.hpp"
#include "how2/analysis/regression.hpp"
#include "how2/bench/dedup.hpp"
#include "how2/corpus/records.hpp"

// Independent reference computations used by unit and acceptance tests.
// None of these call the library routine they check.
namespace how2::test::oracle {

/// Literal pair-counting definition of nominal alpha: 1 - D_o / D_e with
/// D_o averaged over within-unit ordered pairs (weighted 1 / (m_u - 1)) and
/// D_e over all ordered pairs of pairable values.
double krippendorff_alpha(const std::vector<std::vector<std::optional<int>>>& cells);

/// Double loop over every (eval, train) pair with the same tie rule.
bench::SimilarityReport nearest_neighbours(const std::vector<std::string>& eval_ids,
                                           const std::vector<bench::Vector>& eval,
                                           const std::vector<std::string>& train_ids,
                                           const std::vector<bench::Vector>& train);

/// exp(-mean) in 50-digit binary floating point, rounded to double.
double perplexity_hp(const std::vector<double>& logprobs);

/// 1 - 6 sum d^2 / (n (n^2 - 1)); valid only without ties.
double spearman_no_ties(const std::vector<double>& xs, const std::vector<double>& ys);

/// Count of no_failure over valid judgments divided by valid count.
double score_brute_force(const std::vector<corpus::JudgmentRecord>& judgments);

/// Bag-of-words embedding: each lower-cased word adds one to a hashed
/// bucket; the result is unit-normalized.
bench::Vector bow_embedding(const std::string& text, std::size_t dim = 512);

double cosine(const bench::Vector& a, const bench::Vector& b);

std::vector<bench::Vector> random_unit_vectors(std::size_t n, std::size_t dim, std::mt19937_64& rng);

// Synthetic logistic data with an intercept, three numeric covariates and
// one dummy per non-baseline topic.
struct LogisticTruth {
  std::vector<std::string> names;  // matching build_design's column order
  std::vector<double> beta;
};

LogisticTruth default_logistic_truth();

std::vector<analysis::RegressionExample> simulate_logistic(const LogisticTruth& truth, std::size_t n,
                                                           std::mt19937_64& rng);

/// Penalized log-likelihood in long double, written from the definition.
long double log_likelihood_ld(const analysis::Design& design, const std::vector<long double>& beta, double lambda);

/// Five-point central-difference gradient of log_likelihood_ld, with the
/// step scaled down by each column's largest magnitude.
std::vector<double> finite_difference_gradient(const analysis::Design& design, const std::vector<double>& beta,
                                               double lambda);

/// Random judgments over all topics; about `invalid_share` are invalid.
std::vector<corpus::JudgmentRecord> random_judgments(std::size_t n, std::mt19937_64& rng,
                                                     double invalid_share = 0.05);

}  // namespace how2::test::oracle

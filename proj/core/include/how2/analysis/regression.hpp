#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "how2/corpus/records.hpp"

namespace how2::analysis {

struct RegressionExample {
  bool no_failure = false;  // the modelled outcome
  double steps = 0.0;       // |S*|
  double resources = 0.0;   // |R|
  std::optional<double> ratio;  // 100 * gen / ref; empty when undefined
  std::optional<corpus::Topic> topic;
};

struct RegressionSpec {
  corpus::Topic baseline = corpus::Topic::art_design;
  // Penalty (lambda / 2) * ||beta||^2 over every coefficient except the intercept.
  double l2_lambda = 1e-6;
  int max_iterations = 200;
  // Converged once half the Newton decrement g' H^-1 g drops below this.
  double tolerance = 1e-10;
  // |linear predictor| above this at the optimum flags (quasi-)separation.
  double separation_eta = 30.0;
};

// Dense design: column 0 is the intercept.
struct Design {
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  std::vector<bool> penalized;
  std::size_t n_excluded = 0;
};

/// Columns: intercept, steps, resources, ratio, then one dummy per observed
/// non-baseline topic in topic order. Examples missing the ratio or topic
/// are excluded and counted.
Design build_design(const std::vector<RegressionExample>& examples, const RegressionSpec& spec);

double penalized_log_likelihood(const Design& design, const std::vector<double>& beta, double lambda);
std::vector<double> penalized_gradient(const Design& design, const std::vector<double>& beta, double lambda);

struct RegressionFit {
  std::vector<std::string> names;
  std::vector<double> beta;
  std::vector<std::vector<double>> covariance;  // inverse of the negative penalized Hessian
  std::size_t n_used = 0;
  std::size_t n_excluded = 0;
  int iterations = 0;
  bool converged = false;
  bool separation = false;  // CIs unreliable when set
  double log_likelihood = 0.0;  // penalized
  std::vector<double> log_likelihood_trace;  // after each iteration, starting at beta = 0

  std::vector<double> standard_errors() const;
  bool reliable() const noexcept { return converged && !separation; }
};

/// Damped Newton from zero with step halving. Throws ValidationError when
/// either outcome class is absent.
RegressionFit fit_design(const Design& design, const RegressionSpec& spec);
RegressionFit fit_logistic(const std::vector<RegressionExample>& examples, const RegressionSpec& spec = {});

struct OddsRatio {
  std::string name;
  double beta = 0.0;
  double se = 0.0;
  double odds_ratio = 1.0;
  double lo = 1.0;
  double hi = 1.0;
  bool reliable = true;
};

/// Two-sided normal quantile for `level` (1.959964 at 0.95).
double wald_z(double level);

OddsRatio odds_ratio(double beta, double se, double level = 0.95);
std::vector<OddsRatio> odds_ratios(const RegressionFit& fit, double level = 0.95);

/// name,beta,se,odds_ratio,ci_low,ci_high,reliable
std::string odds_ratio_csv(const std::vector<OddsRatio>& rows);

/// Joins judgments to their generation and instance; invalid judgments are
/// skipped, and a missing or zero reference length leaves the ratio empty.
std::vector<RegressionExample> regression_examples(const std::vector<corpus::ProcedureInstance>& instances,
                                                   const std::vector<corpus::GenerationRecord>& gens,
                                                   const std::vector<corpus::JudgmentRecord>& judgments);

}  // namespace how2::analysis

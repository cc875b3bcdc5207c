#include "how2/analysis/regression.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "how2/util/error.hpp"

namespace how2::analysis {

namespace {

Eigen::MatrixXd to_matrix(const Design& d) {
  const auto n = static_cast<Eigen::Index>(d.rows.size());
  const auto p = static_cast<Eigen::Index>(d.names.size());
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = d.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return x;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::VectorXd penalty_mask(const Design& d) {
  Eigen::VectorXd m(static_cast<Eigen::Index>(d.penalized.size()));
  for (std::size_t j = 0; j < d.penalized.size(); ++j) m(static_cast<Eigen::Index>(j)) = d.penalized[j] ? 1.0 : 0.0;
  return m;
}

// log(1 + e^eta) without overflow.
double softplus(double eta) { return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

double sigmoid(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

struct Problem {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd mask;
  double lambda;

  double loglik(const Eigen::VectorXd& beta) const {
    const Eigen::VectorXd eta = x * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y(i) * eta(i) - softplus(eta(i));
    return ll - 0.5 * lambda * beta.cwiseProduct(mask).squaredNorm();
  }

  Eigen::VectorXd probabilities(const Eigen::VectorXd& beta) const {
    Eigen::VectorXd p = x * beta;
    for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = sigmoid(p(i));
    return p;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& beta) const {
    return x.transpose() * (y - probabilities(beta)) - lambda * beta.cwiseProduct(mask);
  }

  // Negative Hessian: X' W X + lambda * diag(mask).
  Eigen::MatrixXd information(const Eigen::VectorXd& beta) const {
    const Eigen::VectorXd p = probabilities(beta);
    const Eigen::VectorXd w = p.cwiseProduct(Eigen::VectorXd::Ones(p.size()) - p);
    Eigen::MatrixXd h = x.transpose() * w.asDiagonal() * x;
    h.diagonal() += lambda * mask;
    return h;
  }
};

Problem make_problem(const Design& d, double lambda) {
  return Problem{to_matrix(d), to_vector(d.y), penalty_mask(d), lambda};
}

}  // namespace

Design build_design(const std::vector<RegressionExample>& examples, const RegressionSpec& spec) {
  Design d;
  std::set<corpus::Topic> observed;
  std::vector<const RegressionExample*> used;
  for (const auto& e : examples) {
    if (!e.ratio || !e.topic || !std::isfinite(*e.ratio)) {
      ++d.n_excluded;
      continue;
    }
    used.push_back(&e);
    if (*e.topic != spec.baseline) observed.insert(*e.topic);
  }
  d.names = {"intercept", "steps", "resources", "ratio"};
  std::unordered_map<corpus::Topic, std::size_t> column;
  for (auto t : observed) {
    column[t] = d.names.size();
    d.names.push_back("topic[" + std::string(corpus::topic_name(t)) + "]");
  }
  d.penalized.assign(d.names.size(), true);
  d.penalized[0] = false;
  for (const auto* e : used) {
    std::vector<double> row(d.names.size(), 0.0);
    row[0] = 1.0;
    row[1] = e->steps;
    row[2] = e->resources;
    row[3] = *e->ratio;
    if (auto it = column.find(*e->topic); it != column.end()) row[it->second] = 1.0;
    d.rows.push_back(std::move(row));
    d.y.push_back(e->no_failure ? 1.0 : 0.0);
  }
  return d;
}

double penalized_log_likelihood(const Design& design, const std::vector<double>& beta, double lambda) {
  return make_problem(design, lambda).loglik(to_vector(beta));
}

std::vector<double> penalized_gradient(const Design& design, const std::vector<double>& beta, double lambda) {
  const Eigen::VectorXd g = make_problem(design, lambda).gradient(to_vector(beta));
  return {g.data(), g.data() + g.size()};
}

std::vector<double> RegressionFit::standard_errors() const {
  std::vector<double> se(beta.size());
  for (std::size_t j = 0; j < beta.size(); ++j) se[j] = std::sqrt(std::max(0.0, covariance[j][j]));
  return se;
}

RegressionFit fit_design(const Design& design, const RegressionSpec& spec) {
  if (spec.l2_lambda < 0) throw ConfigError("l2_lambda must be >= 0");
  const auto positives = std::count(design.y.begin(), design.y.end(), 1.0);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(design.y.size())) {
    throw ValidationError("logistic regression needs at least one example of each outcome");
  }
  const auto prob = make_problem(design, spec.l2_lambda);
  const auto p = prob.x.cols();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double ll = prob.loglik(beta);

  RegressionFit fit;
  fit.names = design.names;
  fit.n_used = design.rows.size();
  fit.n_excluded = design.n_excluded;
  fit.log_likelihood_trace.push_back(ll);

  for (int it = 0; it < spec.max_iterations; ++it) {
    const Eigen::VectorXd g = prob.gradient(beta);
    const Eigen::MatrixXd info = prob.information(beta);
    Eigen::VectorXd step = info.ldlt().solve(g);
    if (!step.allFinite()) step = info.completeOrthogonalDecomposition().solve(g);
    // Newton decrement: the predicted log-likelihood gain of a full step.
    // Unlike the raw gradient norm it does not depend on covariate scale.
    const double decrement = 0.5 * g.dot(step);
    if (decrement <= spec.tolerance) {
      fit.converged = true;
      break;
    }
    double t = 1.0;
    Eigen::VectorXd candidate = beta + step;
    double cand_ll = prob.loglik(candidate);
    for (int halvings = 0; halvings < 40 && !(cand_ll >= ll); ++halvings) {
      t *= 0.5;
      candidate = beta + t * step;
      cand_ll = prob.loglik(candidate);
    }
    ++fit.iterations;
    if (!(cand_ll >= ll)) break;  // no ascent representable in floating point
    beta = candidate;
    ll = cand_ll;
    fit.log_likelihood_trace.push_back(ll);
  }

  const Eigen::VectorXd eta = prob.x * beta;
  fit.separation = eta.size() > 0 && eta.cwiseAbs().maxCoeff() > spec.separation_eta;

  const Eigen::MatrixXd info = prob.information(beta);
  Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  cov = 0.5 * (cov + cov.transpose());
  fit.beta.assign(beta.data(), beta.data() + p);
  fit.covariance.assign(static_cast<std::size_t>(p), std::vector<double>(static_cast<std::size_t>(p)));
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) fit.covariance[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = cov(i, j);
  }
  fit.log_likelihood = ll;
  return fit;
}

RegressionFit fit_logistic(const std::vector<RegressionExample>& examples, const RegressionSpec& spec) {
  return fit_design(build_design(examples, spec), spec);
}

double wald_z(double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + level / 2.0);
}

OddsRatio odds_ratio(double beta, double se, double level) {
  const double z = wald_z(level);
  return OddsRatio{"", beta, se, std::exp(beta), std::exp(beta - z * se), std::exp(beta + z * se), true};
}

std::vector<OddsRatio> odds_ratios(const RegressionFit& fit, double level) {
  const auto se = fit.standard_errors();
  std::vector<OddsRatio> out;
  for (std::size_t j = 0; j < fit.beta.size(); ++j) {
    auto r = odds_ratio(fit.beta[j], se[j], level);
    r.name = fit.names[j];
    r.reliable = fit.reliable();
    out.push_back(std::move(r));
  }
  return out;
}

std::string odds_ratio_csv(const std::vector<OddsRatio>& rows) {
  std::string out = "name,beta,se,odds_ratio,ci_low,ci_high,reliable\n";
  for (const auto& r : rows) {
    std::string name = r.name;
    if (name.find_first_of(",\"") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : name) {
        if (c == '"') quoted += '"';
        quoted += c;
      }
      name = quoted + "\"";
    }
    out += fmt::format("{},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{}\n", name, r.beta, r.se, r.odds_ratio, r.lo, r.hi,
                       r.reliable ? "true" : "false");
  }
  return out;
}

std::vector<RegressionExample> regression_examples(const std::vector<corpus::ProcedureInstance>& instances,
                                                   const std::vector<corpus::GenerationRecord>& gens,
                                                   const std::vector<corpus::JudgmentRecord>& judgments) {
  std::unordered_map<std::string, const corpus::ProcedureInstance*> inst_by_id;
  for (const auto& i : instances) inst_by_id.emplace(i.id, &i);
  std::unordered_map<std::string, const corpus::GenerationRecord*> gen_by_id;
  for (const auto& g : gens) gen_by_id.emplace(g.generation_id(), &g);

  std::vector<RegressionExample> out;
  for (const auto& j : judgments) {
    if (!j.valid) continue;
    RegressionExample e;
    e.no_failure = j.binary() == corpus::Verdict::no_failure;
    const auto inst = inst_by_id.find(j.instance_id);
    if (inst != inst_by_id.end()) {
      e.steps = static_cast<double>(inst->second->steps.size());
      e.resources = static_cast<double>(inst->second->resources.size());
      e.topic = inst->second->topic;
    }
    const auto gen = gen_by_id.find(j.generation_id);
    if (gen != gen_by_id.end() && !gen->second->failed && gen->second->ref_tokens > 0) {
      e.ratio = 100.0 * static_cast<double>(gen->second->gen_tokens) / static_cast<double>(gen->second->ref_tokens);
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace how2::analysis

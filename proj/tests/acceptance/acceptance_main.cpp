// One line per acceptance criterion: PASS/FAIL, name, measured detail, time.
// Exits non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "how2/agreement/agreement.hpp"
#include "how2/analysis/rank.hpp"
#include "how2/analysis/regression.hpp"
#include "how2/annotation/service.hpp"
#include "how2/bench/dedup.hpp"
#include "how2/corpus/jsonl.hpp"
#include "how2/corpus/tokenizer.hpp"
#include "how2/mine/heuristics.hpp"
#include "how2/mine/pipeline.hpp"
#include "how2/rewards/reward.hpp"
#include "how2/rewards/service.hpp"
#include "how2/scoring/format_metrics.hpp"
#include "how2/scoring/perplexity.hpp"
#include "how2/scoring/score.hpp"
#include "mock_llm.hpp"
#include "oracles.hpp"
#include "scripted_llm.hpp"

namespace {

using namespace how2;
using test::MockLlm;
namespace oracle = test::oracle;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("FAILED " + what);
    }
  }
  void note(const std::string& what) { notes.push_back(what); }
};

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

// ---------------------------------------------------------------------------

Outcome length_reward_goldens() {
  Outcome o;
  const rewards::LengthRewardConfig cfg{0.2, 5.0};
  const std::vector<std::pair<double, double>> cases = {
      {1.0, 1.0}, {0.8, 1.0}, {1.2, 1.0}, {1.6, std::exp(-2.5)}, {0.5, std::exp(-1.875)}};
  double worst = 0.0;
  for (const auto& [r, expected] : cases) {
    const double got = rewards::length_reward_for_ratio(r, cfg);
    worst = std::max(worst, std::abs(got - expected));
    o.check(std::abs(got - expected) <= 1e-9, fmt::format("R_len({}) = {:.10f}, expected {:.10f}", r, got, expected));
  }
  // Same ratios from integer token counts.
  const std::vector<std::tuple<std::int64_t, std::int64_t, double>> counts = {
      {10, 10, 1.0}, {8, 10, 1.0}, {12, 10, 1.0}, {16, 10, std::exp(-2.5)}, {5, 10, std::exp(-1.875)}};
  for (const auto& [g, r, expected] : counts) {
    const double got = rewards::length_reward(g, r, cfg);
    worst = std::max(worst, std::abs(got - expected));
    o.check(std::abs(got - expected) <= 1e-9, fmt::format("length_reward({}, {})", g, r));
  }
  o.check(std::abs(std::exp(-2.5) - 0.0820850) < 5e-8 && std::abs(std::exp(-1.875) - 0.1533550) < 5e-8,
          "closed forms match the quoted decimals");
  o.note(fmt::format("max |err| = {:.3g}", worst));
  return o;
}

std::vector<std::string> distinct_steps(std::size_t n) {
  static const char* verbs[] = {"Open", "Measure", "Cut", "Fold", "Glue", "Press", "Sand", "Paint",
                                "Dry",  "Inspect", "Label", "Stack", "Wrap", "Ship", "Record", "Sweep"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::string(verbs[i % 16]) + " item " + std::to_string(i + 1));
  return out;
}

Outcome heuristics_filter_table() {
  Outcome o;
  const mine::HeuristicsConfig cfg;
  const std::vector<std::pair<std::size_t, bool>> table = {{4, false}, {5, true}, {15, true}, {16, false}};
  for (const auto& [n, accept] : table) {
    const auto d = mine::heuristic_filter(distinct_steps(n), cfg);
    o.check(d.pass == accept, fmt::format("{} steps -> {}", n, d.pass ? "accept" : "reject:" + d.reason));
    if (!accept) o.check(d.reason == "step_count", fmt::format("{} steps reason step_count", n));
  }
  const std::vector<std::string> valve(5, "check the valve");
  const double rate = mine::pooled_repetition_rate(valve, 2);
  o.check(std::abs(rate - 0.8) < 1e-12, fmt::format("bigram rate {} == 0.8", rate));
  const auto d = mine::heuristic_filter(valve, cfg);
  o.check(!d.pass && d.reason == "bigram_repetition", "repetition fixture rejected with bigram_repetition");
  o.note(fmt::format("table 4/5/15/16 ok, valve bigram rate {:.4f}", rate));
  return o;
}

Outcome dup_ngram_metric() {
  Outcome o;
  const std::vector<std::string> steps = {"mix the flour", "mix the dough"};
  const double expected[] = {1.0 / 3.0, 1.0 / 5.0, 0.0, 0.0};
  for (std::size_t n = 1; n <= 4; ++n) {
    const double got = scoring::dup_ngram_rate(steps, n);
    o.check(std::abs(got - expected[n - 1]) < 1e-12, fmt::format("n={} rate {}", n, got));
  }
  const double mean = scoring::mean_dup_ngram_rate(steps);
  o.check(std::abs(mean - 0.13333) <= 1e-5 + 1e-6 && std::abs(mean - 2.0 / 15.0) <= 1e-6,
          fmt::format("mean {:.6f}", mean));
  o.note(fmt::format("rates 1/3, 1/5, 0, 0; mean {:.6f}", mean));
  return o;
}

Outcome score_equivalence() {
  Outcome o;
  std::mt19937_64 rng(20240611);
  const auto judgments = oracle::random_judgments(10000, rng);
  const auto summary = scoring::score(judgments);
  const double brute = oracle::score_brute_force(judgments);
  o.check(summary.overall == brute, fmt::format("score {} == brute force {}", summary.overall, brute));
  double recomposed = 0.0;
  std::size_t total = 0;
  for (const auto& [topic, ts] : summary.per_topic) {
    recomposed += static_cast<double>(ts.n_examples) / static_cast<double>(summary.n_examples) * ts.rate;
    total += ts.n_examples;
  }
  o.check(total == summary.n_examples, "per-topic counts sum to the total");
  o.check(std::abs(recomposed - summary.overall) <= 1e-12,
          fmt::format("per-topic identity |diff| = {:.3g}", std::abs(recomposed - summary.overall)));
  o.note(fmt::format("n={} valid={} score={:.6f}", judgments.size(), summary.n_examples, summary.overall));
  return o;
}

Outcome krippendorff() {
  Outcome o;
  agreement::LabelMatrix hand{{{0, 0}, {1, 1}, {0, 0}, {0, 1}}};
  const double a = agreement::krippendorff_alpha(hand);
  o.check(std::abs(a - 0.533333) <= 1e-6, fmt::format("hand case alpha {:.7f}", a));

  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> label(0, 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    agreement::LabelMatrix m;
    const double p_missing = rep % 2 == 0 ? 0.0 : 0.1;
    for (int i = 0; i < 50; ++i) {
      std::vector<std::optional<int>> row;
      for (int r = 0; r < 3; ++r) {
        if (u(rng) < p_missing) {
          row.push_back(std::nullopt);
        } else {
          row.push_back(label(rng));
        }
      }
      m.cells.push_back(row);
    }
    const double got = agreement::krippendorff_alpha(m);
    const double want = oracle::krippendorff_alpha(m.cells);
    worst = std::max(worst, std::abs(got - want));
  }
  o.check(worst <= 1e-9, fmt::format("100 random 3x50 matrices, max |diff| = {:.3g}", worst));

  agreement::LabelMatrix perfect;
  for (int i = 0; i < 20; ++i) perfect.cells.push_back({i % 2, i % 2, i % 2});
  o.check(agreement::krippendorff_alpha(perfect) == 1.0, "perfect agreement is exactly 1.0");
  o.note(fmt::format("hand {:.6f}; random max |diff| {:.3g}", a, worst));
  return o;
}

Outcome spearman_checks() {
  Outcome o;
  // Nine checkpoints of a 1B model: (benchmark score, reference perplexity).
  const std::vector<std::pair<double, double>> table = {{0.06, 11.60}, {0.56, 9.63}, {0.76, 9.25},
                                                        {0.80, 9.11},  {0.96, 8.95}, {1.51, 9.07},
                                                        {1.49, 8.28},  {1.59, 8.30}, {6.39, 7.72}};
  std::vector<analysis::CheckpointRecord> records;
  for (std::size_t i = 0; i < table.size(); ++i) {
    records.push_back({"ckpt-" + std::to_string(i + 1), table[i].first, table[i].second});
  }
  const double rho = analysis::rank_checkpoints(records).rho;
  o.check(std::abs(rho - 0.917) <= 1e-3, fmt::format("checkpoint rho {:.4f}", rho));
  std::vector<double> xs, ys;
  for (const auto& [s, p] : table) {
    xs.push_back(s);
    ys.push_back(-p);
  }
  o.check(std::abs(rho - oracle::spearman_no_ties(xs, ys)) < 1e-12, "matches the no-ties closed form");

  std::vector<double> up, down;
  for (int i = 0; i < 25; ++i) {
    up.push_back(i * 1.5 + 2);
    down.push_back(100.0 - i * i);
  }
  o.check(analysis::spearman(up, up) == 1.0, "monotone gives exactly 1.0");
  o.check(analysis::spearman(up, down) == -1.0, "reversed gives exactly -1.0");
  o.note(fmt::format("rho = {:.4f}", rho));
  return o;
}

Outcome logistic_regression() {
  Outcome o;
  const auto truth = oracle::default_logistic_truth();
  std::mt19937_64 rng(99);
  const auto examples = oracle::simulate_logistic(truth, 5000, rng);
  analysis::RegressionSpec spec;
  const auto fit = analysis::fit_logistic(examples, spec);
  o.check(fit.names == truth.names, "design columns follow the documented order");
  o.check(fit.beta.size() == 17, fmt::format("{} coefficients (13 topic dummies)", fit.beta.size()));
  o.check(fit.reliable(), "fit converged without separation");
  const auto se = fit.standard_errors();
  double worst_z = 0.0;
  for (std::size_t k = 0; k < fit.beta.size() && k < truth.beta.size(); ++k) {
    const double z = std::abs(fit.beta[k] - truth.beta[k]) / se[k];
    worst_z = std::max(worst_z, z);
    o.check(z <= 3.0, fmt::format("{} within 3 SE (z = {:.2f})", fit.names[k], z));
  }

  const auto design = analysis::build_design(examples, spec);
  double worst_grad = 0.0;
  for (const auto* point : {&truth.beta, &fit.beta}) {
    std::vector<double> beta = *point;
    for (double& b : beta) b *= 0.7;  // away from the optimum, where the gradient is non-trivial
    const auto g = analysis::penalized_gradient(design, beta, spec.l2_lambda);
    const auto fd = oracle::finite_difference_gradient(design, beta, spec.l2_lambda);
    for (std::size_t k = 0; k < g.size(); ++k) worst_grad = std::max(worst_grad, std::abs(g[k] - fd[k]));
  }
  o.check(worst_grad <= 1e-6, fmt::format("gradient vs finite differences max |diff| = {:.3g}", worst_grad));

  const int reps = 500;
  std::vector<int> covered(truth.beta.size(), 0);
  int unreliable = 0;
  for (int rep = 0; rep < reps; ++rep) {
    const auto sample = oracle::simulate_logistic(truth, 5000, rng);
    const auto f = analysis::fit_logistic(sample, spec);
    if (!f.reliable()) ++unreliable;
    const auto rows = analysis::odds_ratios(f, 0.95);
    for (std::size_t k = 0; k < truth.beta.size(); ++k) {
      const double lo = std::log(rows[k].lo);
      const double hi = std::log(rows[k].hi);
      if (lo <= truth.beta[k] && truth.beta[k] <= hi) ++covered[k];
    }
  }
  double min_cov = 1.0, max_cov = 0.0;
  for (std::size_t k = 0; k < covered.size(); ++k) {
    const double c = static_cast<double>(covered[k]) / reps;
    min_cov = std::min(min_cov, c);
    max_cov = std::max(max_cov, c);
    o.check(std::abs(c - 0.95) <= 0.03, fmt::format("{} coverage {:.3f}", truth.names[k], c));
  }
  o.check(unreliable == 0, fmt::format("{} unreliable fits", unreliable));
  o.note(fmt::format("max z {:.2f}; grad |diff| {:.2g}; coverage per coefficient in [{:.3f}, {:.3f}] over {} reps",
                     worst_z, worst_grad, min_cov, max_cov, reps));
  return o;
}

Outcome pipeline_accounting() {
  Outcome o;
  test::TempDir dir;
  const auto docs = test::pipeline_documents();
  auto cfg = test::test_gateway_config();
  cfg.cache_dir = dir / "cache";

  const auto run_once = [&](bool offline, std::size_t& requests) {
    auto llm = std::make_shared<MockLlm>();
    test::install_scripted_llm(*llm);
    auto c = cfg;
    c.offline = offline;
    auto gw = test::make_gateway(llm, c);
    const mine::MinePipeline pipeline(*gw, test::prompts());
    auto result = pipeline.run(docs);
    requests = llm->requests();
    std::string bytes;
    for (const auto& inst : result.instances) bytes += corpus::serialize(inst) + "\n";
    bytes += result.report.to_json().dump(2);
    return std::make_pair(std::move(result), bytes);
  };

  std::size_t cold_requests = 0, warm_requests = 0;
  const auto [cold, cold_bytes] = run_once(false, cold_requests);
  const auto [warm, warm_bytes] = run_once(true, warm_requests);

  o.check(cold.report.telescopes(), "stage yield report telescopes");
  o.check(cold.report.at(mine::Stage::extraction).input_count == docs.size(), "extraction input equals documents");
  o.check(cold.instances.size() + cold.rejected.size() == docs.size(), "every document accounted for");
  const auto expected = test::expected_pipeline_rejections();
  o.check(cold.instances.size() == docs.size() - expected.size(),
          fmt::format("{} instances retained", cold.instances.size()));
  for (const auto& cand : cold.rejected) {
    const auto it = expected.find(cand.document_id);
    const auto& last = cand.stage_history.back();
    const bool ok = it != expected.end() && std::string(mine::stage_name(last.stage)) == it->second.first &&
                    last.reason == it->second.second;
    o.check(ok, fmt::format("{} rejected at {}:{}", cand.document_id, mine::stage_name(last.stage), last.reason));
  }
  o.check(warm_bytes == cold_bytes, "warm-cache rerun is byte-identical");
  o.check(warm_requests == 0, fmt::format("warm rerun made {} endpoint requests", warm_requests));
  o.note(fmt::format("20 docs -> {} instances; cold {} requests, warm {}", cold.instances.size(), cold_requests,
                     warm_requests));
  return o;
}

corpus::ProcedureInstance worded_instance(const std::string& id, const std::vector<std::string>& words,
                                          std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  corpus::ProcedureInstance inst;
  inst.id = id;
  const auto phrase = [&](int n) {
    std::string s;
    for (int i = 0; i < n; ++i) s += (i ? " " : "") + words[pick(rng)];
    return s;
  };
  inst.goal = phrase(6);
  for (int s = 0; s < 6; ++s) inst.steps.push_back(phrase(8));
  return inst;
}

Outcome dedup() {
  Outcome o;
  std::mt19937_64 rng(5);
  std::vector<std::string> train_words, fresh_words;
  for (int i = 0; i < 400; ++i) train_words.push_back("tw" + std::to_string(i));
  for (int i = 0; i < 400; ++i) fresh_words.push_back("fw" + std::to_string(i));

  std::vector<corpus::ProcedureInstance> train, eval;
  for (int i = 0; i < 60; ++i) train.push_back(worded_instance(fmt::format("train-{:03d}", i), train_words, rng));
  std::set<std::string> planted;
  for (int i = 0; i < 12; ++i) {
    auto dup = train[static_cast<std::size_t>(i * 5)];
    dup.id = fmt::format("eval-dup-{:02d}", i);
    dup.steps[static_cast<std::size_t>(i % 6)] += " carefully";  // a light edit
    if (i % 2 == 0) dup.goal = "Please " + dup.goal;
    planted.insert(dup.id);
    eval.push_back(dup);
  }
  for (int i = 0; i < 30; ++i) eval.push_back(worded_instance(fmt::format("eval-new-{:02d}", i), fresh_words, rng));

  auto llm = std::make_shared<MockLlm>();
  llm->on_embed([](const std::string& text) { return oracle::bow_embedding(text); });
  auto gw = test::make_gateway(llm);
  const auto eval_vecs = bench::embed_instances(*gw, eval);
  const auto train_vecs = bench::embed_instances(*gw, train);
  std::vector<std::string> eval_ids, train_ids;
  for (const auto& e : eval) eval_ids.push_back(e.id);
  for (const auto& t : train) train_ids.push_back(t.id);
  const auto report = bench::nearest_train_similarity(eval_ids, eval_vecs, train_ids, train_vecs, 4);
  const auto kept = bench::dedup_filter(report, 0.65);
  const std::set<std::string> kept_set(kept.begin(), kept.end());
  std::size_t removed_planted = 0;
  for (const auto& id : planted) removed_planted += kept_set.count(id) ? 0 : 1;
  o.check(removed_planted == planted.size(),
          fmt::format("{} of {} planted near-duplicates removed", removed_planted, planted.size()));
  o.check(kept.size() == eval.size() - planted.size(), fmt::format("{} fresh candidates retained", kept.size()));

  // Boundary: cosine exactly 0.65 is retained.
  const bench::Vector t{1.0, 0.0};
  const bench::Vector e{0.65, std::sqrt(1.0 - 0.65 * 0.65)};
  const auto boundary = bench::nearest_train_similarity({"edge"}, {e}, {"anchor"}, {t});
  o.check(boundary[0].cosine == 0.65, fmt::format("boundary cosine {:.17g}", boundary[0].cosine));
  o.check(bench::dedup_filter(boundary, 0.65).size() == 1, "cosine 0.65 retained at tau 0.65");

  // Exact search against the double loop.
  std::mt19937_64 vrng(11);
  const auto ev = oracle::random_unit_vectors(100, 24, vrng);
  const auto tv = oracle::random_unit_vectors(100, 24, vrng);
  std::vector<std::string> eids, tids;
  for (int i = 0; i < 100; ++i) {
    eids.push_back(fmt::format("e{:03d}", i));
    tids.push_back(fmt::format("t{:03d}", i));
  }
  const auto fast = bench::nearest_train_similarity(eids, ev, tids, tv, 4);
  const auto brute = oracle::nearest_neighbours(eids, ev, tids, tv);
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < fast.size(); ++i) {
    if (fast[i].nearest_train_id != brute[i].nearest_train_id || std::abs(fast[i].cosine - brute[i].cosine) > 1e-12) {
      ++mismatches;
    }
  }
  o.check(mismatches == 0 && fast.size() == 100, fmt::format("{} mismatches vs brute force", mismatches));
  o.note(fmt::format("planted removed {}/{}, boundary retained, NN exact on 100 vectors", removed_planted,
                     planted.size()));
  return o;
}

Outcome reward_service() {
  Outcome o;
  auto llm = std::make_shared<MockLlm>();
  test::install_scripted_llm(*llm);
  auto gw = test::make_gateway(llm);
  rewards::RewardConfig cfg;
  rewards::RewardService service({}, *gw, test::prompts(), corpus::default_registry(), cfg);
  util::HttpHost host([&](const util::HttpRequest& r) { return service.handle(r); });
  const int port = host.start("127.0.0.1", 0);
  const auto client = gateway::make_http_transport("http://127.0.0.1:" + std::to_string(port), 30.0);
  const std::map<std::string, std::string> headers = {{"Content-Type", "application/json"}};

  const auto request = test::read_file(test::fixtures_dir() / "reward" / "request.json");
  const auto expected =
      nlohmann::ordered_json::parse(test::read_file(test::fixtures_dir() / "reward" / "response.json"));
  const auto res = client->post("/v1/reward", request, headers);
  o.check(res.status == 200, fmt::format("fixture request status {}", res.status));
  o.check(res.body == expected.dump(), "fixture response matches the golden breakdown byte for byte");
  if (res.body != expected.dump()) o.check(false, "got " + res.body);

  // Randomized requests: the total equals the weighted component sum.
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> n_steps(1, 9);
  std::uniform_int_distribution<int> n_words(2, 14);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  int bad_status = 0;
  std::array<int, 2> judge_seen{0, 0};
  for (int i = 0; i < 1000; ++i) {
    nlohmann::json req;
    std::vector<std::string> ref;
    const int nr = n_steps(rng);
    for (int s = 0; s < nr; ++s) ref.push_back(std::string(static_cast<std::size_t>(n_words(rng)) * 2, 'r') + " step");
    req["goal"] = "Randomized goal " + std::to_string(i);
    req["reference_steps"] = ref;
    std::string answer;
    const int ng = n_steps(rng);
    for (int s = 0; s < ng; ++s) {
      std::string text;
      const int w = n_words(rng);
      for (int k = 0; k < w; ++k) text += (k ? " " : "") + std::string("word");
      if (u(rng) < 0.1) text += " skip";
      const int label = (u(rng) < 0.05 && s > 0) ? s + 2 : s + 1;  // occasional numbering gap
      answer += std::to_string(label) + ". " + text + "\n";
    }
    req["answer_text"] = answer;
    if (u(rng) < 0.5) req["expected_n"] = nr;
    if (u(rng) < 0.3) req["gen_tokens"] = n_words(rng) * 3;
    if (u(rng) < 0.3) req["ref_tokens"] = n_words(rng) * 3;
    const auto r = client->post("/v1/reward", req.dump(), headers);
    if (r.status != 200) {
      ++bad_status;
      continue;
    }
    const auto b = nlohmann::json::parse(r.body);
    const double sum = cfg.weights.judge * b["judge"].get<int>() + cfg.weights.format * b["format"].get<int>() +
                       cfg.weights.length * b["length"].get<double>();
    worst = std::max(worst, std::abs(sum - b["total"].get<double>()));
    ++judge_seen[static_cast<std::size_t>(b["judge"].get<int>())];
  }
  host.stop();
  o.check(bad_status == 0, fmt::format("{} non-200 replies", bad_status));
  o.check(worst <= 1e-12, fmt::format("component-sum identity max |diff| = {:.3g}", worst));
  o.check(judge_seen[0] > 0 && judge_seen[1] > 0, "both judge outcomes exercised");
  o.note(fmt::format("golden ok; 1000 randomized requests, judge 0/1 = {}/{}, max |diff| {:.2g}", judge_seen[0],
                     judge_seen[1], worst));
  return o;
}

Outcome conditional_perplexity() {
  Outcome o;
  const std::vector<double> uniform(257, std::log(0.5));
  const double ppl = scoring::conditional_perplexity(uniform);
  o.check(std::abs(ppl - 2.0) <= 1e-12, fmt::format("uniform ln 0.5 -> {:.15f}", ppl));

  // Through the gateway: every echoed continuation token scored ln 0.5.
  auto llm = std::make_shared<MockLlm>();
  auto gw = test::make_gateway(llm);
  const auto shots = inference::load_exemplars(inference::default_exemplars_path());
  const auto inst = test::make_instance("ppl-1", corpus::Topic::health, 6);
  const double via_gateway = scoring::reference_step_perplexity(inst, *gw, test::prompts(), shots);
  o.check(std::abs(via_gateway - 2.0) <= 1e-12, fmt::format("teacher-forced via gateway {:.15f}", via_gateway));

  std::vector<std::vector<double>> fixtures = {
      {-0.1, -2.3, -0.7},
      {-1e-9, -30.0},
      {-0.6931471805599453},
      {-5.25, -0.125, -3.5, -0.0625, -7.75},
  };
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> lp(-9.0, -1e-6);
  for (std::size_t len : {2u, 17u, 256u, 4096u}) {
    std::vector<double> v(len);
    for (double& x : v) x = lp(rng);
    fixtures.push_back(v);
  }
  double worst = 0.0;
  for (const auto& f : fixtures) {
    const double got = scoring::conditional_perplexity(f);
    const double want = oracle::perplexity_hp(f);
    worst = std::max(worst, std::abs(got - want));
    o.check(std::abs(got - want) <= 1e-9, fmt::format("fixture of {} tokens: {:.12g} vs {:.12g}", f.size(), got, want));
  }
  o.note(fmt::format("uniform {:.15f}; {} mixed fixtures, max |diff| {:.3g}", ppl, fixtures.size(), worst));
  return o;
}

Outcome annotation_service() {
  Outcome o;
  test::TempDir dir;
  std::vector<annotation::PoolItem> pool;
  for (int i = 0; i < 3; ++i) {
    auto inst = test::make_instance("ann-" + std::to_string(i), corpus::Topic::food_dining, 5);
    auto gen = test::make_generation(inst, "model-a", {"Do a.", "Do b.", "Do c.", "Do d.", "Do e."});
    pool.push_back({inst, gen, true});
  }
  double now = 1000.0;
  annotation::ServiceConfig cfg;
  cfg.store_path = dir / "store.jsonl";
  cfg.admin_token = "admin-secret";
  cfg.clock = [&] { return now; };
  cfg.token_seed = 42;
  annotation::AnnotationService svc(pool, cfg);

  const auto call = [&](const std::string& method, const std::string& path, const std::string& auth,
                        const nlohmann::json& body) {
    util::HttpRequest r;
    r.method = method;
    r.path = path;
    if (!auth.empty()) r.headers["authorization"] = "Bearer " + auth;
    if (!body.is_null()) r.body = body.dump();
    return svc.handle(r);
  };

  const auto session = nlohmann::json::parse(call("POST", "/v1/session", "", {{"annotator_id", "ann-1"}}).body);
  const auto token = session.at("session_token").get<std::string>();
  const auto task_reply = call("GET", "/v1/task", token, nullptr);
  o.check(task_reply.status == 200, "task issued");
  const auto task = nlohmann::json::parse(task_reply.body);
  const auto task_id = task.at("task_id").get<std::string>();
  const nlohmann::json submission = {{"task_id", task_id}, {"verdict", "no_failure"}, {"failures", nlohmann::json::array()}};

  now += 30.0;
  auto r = call("POST", "/v1/submit", token, submission);
  o.check(r.status == 422 && nlohmann::json::parse(r.body).at("reason") == "too_fast",
          "submission at 30 s rejected with too_fast");
  now += 59.0;  // 89 s
  r = call("POST", "/v1/submit", token, submission);
  o.check(r.status == 422 && nlohmann::json::parse(r.body).at("reason") == "too_fast", "89 s still too_fast");

  now += 11.0;  // 100 s, no acknowledgements yet
  r = call("POST", "/v1/submit", token, submission);
  o.check(r.status == 422 && nlohmann::json::parse(r.body).at("reason") == "attention_incomplete",
          "unacknowledged tokens rejected with attention_incomplete");
  const auto& tokens = task.at("attention_tokens");
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    call("POST", "/v1/attention", token, {{"task_id", task_id}, {"token", tokens[i].at("token")}});
  }
  r = call("POST", "/v1/submit", token, submission);
  o.check(r.status == 422 && nlohmann::json::parse(r.body).at("reason") == "attention_incomplete",
          "one missing token still attention_incomplete");
  call("POST", "/v1/attention", token, {{"task_id", task_id}, {"token", tokens.back().at("token")}});
  r = call("POST", "/v1/submit", token, submission);
  o.check(r.status == 200, fmt::format("complete submission accepted (status {})", r.status));

  // A second annotator submits a failure.
  const auto t2 = nlohmann::json::parse(call("POST", "/v1/session", "", {{"annotator_id", "ann-2"}}).body)
                      .at("session_token")
                      .get<std::string>();
  const auto task2 = nlohmann::json::parse(call("GET", "/v1/task", t2, nullptr).body);
  for (const auto& tk : task2.at("attention_tokens")) {
    call("POST", "/v1/attention", t2, {{"task_id", task2.at("task_id")}, {"token", tk.at("token")}});
  }
  now += 120.0;
  r = call("POST", "/v1/submit", t2,
           {{"task_id", task2.at("task_id")},
            {"verdict", "has_failure"},
            {"failures", {{{"description", "step 3 skips \"heat the pan\""}, {"reference_steps", {3}},
                           {"generated_steps", {2, 3}}}}}});
  o.check(r.status == 200, "failure submission accepted");

  const auto exported = call("GET", "/v1/export", "admin-secret", nullptr);
  o.check(exported.status == 200, "export with the admin token");
  o.check(call("GET", "/v1/export", token, nullptr).status == 403, "export refused to a session token");
  const auto store_lines = test::read_file(cfg.store_path);
  o.check(exported.body == store_lines, "export equals the durable store");
  std::size_t lines = 0;
  std::istringstream in(exported.body);
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    ++lines;
    const auto rec = corpus::parse_annotation(line);
    o.check(corpus::serialize(rec) == line, "exported line re-serializes identically");
    o.check(rec.attention_complete && rec.elapsed_seconds >= 90.0, "record carries attention and elapsed time");
  }
  o.check(lines == 2, fmt::format("{} exported records", lines));
  o.note(fmt::format("too_fast at 30/89 s, attention_incomplete enforced, {} records exported losslessly", lines));
  return o;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"length_reward_goldens", 1.0, length_reward_goldens},
      {"heuristics_filter_table", 1.0, heuristics_filter_table},
      {"dup_ngram_metric", 1.0, dup_ngram_metric},
      {"score_equivalence", 60.0, score_equivalence},
      {"krippendorff_alpha", 60.0, krippendorff},
      {"spearman_rank", 1.0, spearman_checks},
      {"logistic_regression", 120.0, logistic_regression},
      {"pipeline_accounting", 10.0, pipeline_accounting},
      {"dedup", 5.0, dedup},
      {"reward_service", 60.0, reward_service},
      {"conditional_perplexity", 60.0, conditional_perplexity},
      {"annotation_service", 60.0, annotation_service},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.notes.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_seconds) {
      o.pass = false;
      o.notes.push_back(fmt::format("FAILED runtime budget {:.0f} s", c.budget_seconds));
    }
    if (!o.pass) ++failed;
    std::string detail;
    for (const auto& n : o.notes) {
      if (o.pass || n.rfind("FAILED", 0) == 0 || n.rfind("exception", 0) == 0) {
        detail += (detail.empty() ? "" : "; ") + n;
      }
    }
    std::cout << fmt::format("{} {:<24} {:>8.3f}s  {}", o.pass ? "PASS" : "FAIL", c.name, secs, detail) << std::endl;
  }
  std::cout << fmt::format("{} of {} criteria passed", criteria.size() - static_cast<std::size_t>(failed),
                           criteria.size())
            << std::endl;
  return failed == 0 ? 0 : 1;
}

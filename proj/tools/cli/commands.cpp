#include "cli/commands.hpp"

#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cli/manifest.hpp"
#include "how2/agreement/agreement.hpp"
#include "how2/analysis/rank.hpp"
#include "how2/analysis/regression.hpp"
#include "how2/annotation/service.hpp"
#include "how2/bench/dedup.hpp"
#include "how2/bench/sampling.hpp"
#include "how2/corpus/jsonl.hpp"
#include "how2/corpus/tokenizer.hpp"
#include "how2/gateway/gateway.hpp"
#include "how2/inference/harness.hpp"
#include "how2/mine/pipeline.hpp"
#include "how2/rewards/service.hpp"
#include "how2/scoring/format_metrics.hpp"
#include "how2/scoring/judge.hpp"
#include "how2/scoring/perplexity.hpp"
#include "how2/scoring/score.hpp"
#include "how2/util/config.hpp"
#include "how2/util/error.hpp"
#include "how2/util/http_host.hpp"
#include "how2/util/prompt_library.hpp"

namespace how2::cli {

namespace {

util::Config load_config(const std::optional<Path>& path) {
  return path ? util::Config::load(*path) : util::Config{};
}

gateway::GatewayConfig gateway_config(const util::Config& cfg, const GatewayFlags& flags) {
  auto g = gateway::GatewayConfig::from_config(cfg, "gateway");
  if (flags.endpoint_url) g.endpoint_url = *flags.endpoint_url;
  if (flags.model_name) g.model_name = *flags.model_name;
  if (flags.cache_dir) g.cache_dir = *flags.cache_dir;
  if (flags.max_in_flight) g.max_in_flight = *flags.max_in_flight;
  if (flags.offline) g.offline = true;
  g.validate();
  return g;
}

// Effective settings as text, for the manifest digest. The API key itself
// never appears; only the name of the variable holding it.
std::string settings_text(const util::Config& cfg, const gateway::GatewayConfig* g) {
  std::string out = cfg.canonical();
  if (g) {
    nlohmann::ordered_json j = {{"endpoint_url", g->endpoint_url},
                                {"model_name", g->model_name},
                                {"api_key_env", g->api_key_env},
                                {"max_in_flight", g->max_in_flight},
                                {"max_attempts", g->retry.max_attempts},
                                {"cache_dir", g->cache_dir.string()},
                                {"temperature", g->temperature},
                                {"stop_sequences", g->stop_sequences},
                                {"offline", g->offline}};
    out += "\n" + j.dump();
  }
  return out;
}

util::PromptLibrary prompt_library(const std::optional<Path>& dir) {
  return util::PromptLibrary(dir ? *dir : util::PromptLibrary::default_dir());
}

void write_text(const Path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void write_json(const Path& path, const nlohmann::ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

void log_gateway(const gateway::ModelGateway& gw) {
  const auto s = gw.stats();
  spdlog::info("gateway: {} calls, {} cache hits, {} attempts, {} failed attempts", s.calls, s.cache_hits,
               s.attempts, s.failed_attempts);
}

mine::HeuristicsConfig heuristics_config(const util::Config& cfg) {
  mine::HeuristicsConfig h;
  h.min_steps = static_cast<std::size_t>(cfg.get_int_or("heuristics.min_steps", static_cast<std::int64_t>(h.min_steps)));
  h.max_steps = static_cast<std::size_t>(cfg.get_int_or("heuristics.max_steps", static_cast<std::int64_t>(h.max_steps)));
  h.rep_thresholds[2] = cfg.get_number_or("heuristics.bigram_threshold", h.rep_thresholds[2]);
  h.rep_thresholds[3] = cfg.get_number_or("heuristics.trigram_threshold", h.rep_thresholds[3]);
  h.rep_thresholds[4] = cfg.get_number_or("heuristics.fourgram_threshold", h.rep_thresholds[4]);
  h.validate();
  return h;
}

}  // namespace

int run_mine(const MineOptions& o, const Io& io) {
  const auto cfg = load_config(o.config);
  const auto gcfg = gateway_config(cfg, o.gateway);
  RunManifest manifest("mine", io.argv);
  manifest.add_input(o.docs);
  if (o.config) manifest.add_input(*o.config);
  manifest.add_output(o.out);
  manifest.add_output(o.report);
  manifest.set_config(settings_text(cfg, &gcfg));
  manifest.check_outputs_distinct();

  const auto docs = corpus::read_documents(o.docs);
  gateway::ModelGateway gw(gcfg);
  const auto prompts = prompt_library(o.prompts);
  mine::PipelineConfig pcfg;
  pcfg.heuristics = heuristics_config(cfg);
  const mine::MinePipeline pipeline(gw, prompts, pcfg);
  const auto result = pipeline.run(docs);

  corpus::write_jsonl(o.out, result.instances);
  write_json(o.report, result.report.to_json());
  manifest.write();
  log_gateway(gw);
  io.out << fmt::format("mined {} instances from {} documents\n", result.instances.size(), docs.size());
  return 0;
}

int run_dedup(const DedupOptions& o, const Io& io) {
  const auto cfg = load_config(o.config);
  const auto gcfg = gateway_config(cfg, o.gateway);
  RunManifest manifest("dedup", io.argv);
  manifest.add_input(o.eval);
  manifest.add_input(o.train);
  manifest.add_output(o.report);
  if (o.out) manifest.add_output(*o.out);
  manifest.set_config(settings_text(cfg, &gcfg) + fmt::format("\ntau={}", o.tau));
  manifest.check_outputs_distinct();

  const auto eval = corpus::read_instances(o.eval);
  const auto train = corpus::read_instances(o.train);
  gateway::ModelGateway gw(gcfg);
  const auto eval_vecs = bench::embed_instances(gw, eval);
  const auto train_vecs = bench::embed_instances(gw, train);
  std::vector<std::string> eval_ids, train_ids;
  for (const auto& i : eval) eval_ids.push_back(i.id);
  for (const auto& i : train) train_ids.push_back(i.id);

  bench::SimilarityReport report;
  if (!train.empty() && !eval.empty()) {
    report = bench::nearest_train_similarity(eval_ids, eval_vecs, train_ids, train_vecs, gcfg.max_in_flight);
  }
  std::vector<std::string> lines;
  for (const auto& e : report) lines.push_back(corpus::dump_line(bench::to_json(e)));
  corpus::write_lines(o.report, lines);

  // Without a train set nothing can be a near-duplicate.
  std::vector<std::string> kept = train.empty() ? eval_ids : bench::dedup_filter(report, o.tau);
  if (o.out) {
    std::unordered_map<std::string, bool> keep;
    for (const auto& id : kept) keep[id] = true;
    std::vector<corpus::ProcedureInstance> retained;
    for (const auto& i : eval) {
      if (keep.count(i.id)) retained.push_back(i);
    }
    corpus::write_jsonl(*o.out, retained);
  }
  manifest.write();
  log_gateway(gw);
  io.out << fmt::format("retained {} of {} candidates at tau={}\n", kept.size(), eval.size(), o.tau);
  return 0;
}

int run_bench(const BenchOptions& o, const Io& io) {
  RunManifest manifest("bench", io.argv);
  manifest.add_input(o.in);
  manifest.add_output(o.out);
  if (o.train_out) manifest.add_output(*o.train_out);
  manifest.set_config(fmt::format("per_topic={}\nseed={}", o.per_topic, o.seed));
  manifest.check_outputs_distinct();

  const auto split = bench::sample_balanced(corpus::read_instances(o.in), o.per_topic, o.seed);
  corpus::write_jsonl(o.out, split.benchmark);
  if (o.train_out) corpus::write_jsonl(*o.train_out, split.training_pool);
  manifest.write();
  io.out << fmt::format("benchmark {} instances, training pool {}\n", split.benchmark.size(),
                        split.training_pool.size());
  return 0;
}

int run_generate(const GenerateOptions& o, const Io& io) {
  const auto cfg = load_config(o.model);
  const auto gcfg = gateway_config(cfg, o.gateway);
  inference::GenerationConfig gen;
  gen.variant = corpus::parse_prompt_variant(o.variant);
  gen.model_id = o.model_id.value_or(cfg.get_string_or("generation.model_id", gcfg.model_name));
  if (gen.model_id.empty()) throw ConfigError("no model id: pass --model-id or set generation.model_id");
  gen.token_scheme = o.token_scheme.value_or(cfg.get_string_or("generation.token_scheme", "whitespace"));
  if (o.max_tokens) {
    gen.max_tokens = *o.max_tokens;
  } else if (auto v = cfg.get_int("generation.max_tokens")) {
    gen.max_tokens = static_cast<int>(*v);
  } else {
    gen.max_tokens = gcfg.max_tokens;
  }
  if (auto v = cfg.get_int("generation.seed")) gen.seed = *v;
  const auto exemplars_path = o.exemplars.value_or(inference::default_exemplars_path());

  RunManifest manifest("generate", io.argv);
  manifest.add_input(o.bench);
  manifest.add_input(exemplars_path);
  if (o.model) manifest.add_input(*o.model);
  manifest.add_output(o.out);
  manifest.set_config(settings_text(cfg, &gcfg) +
                      fmt::format("\nvariant={}\nmodel_id={}\ntoken_scheme={}\nmax_tokens={}", o.variant,
                                  gen.model_id, gen.token_scheme, gen.max_tokens.value_or(-1)));
  manifest.check_outputs_distinct();

  const auto bench_set = corpus::read_instances(o.bench);
  const auto shots = inference::load_exemplars(exemplars_path);
  gateway::ModelGateway gw(gcfg);
  const auto prompts = prompt_library(o.prompts);
  const auto records = inference::run_generation(bench_set, gw, prompts, shots, corpus::default_registry(), gen);
  corpus::write_jsonl(o.out, records);
  manifest.write();
  log_gateway(gw);
  std::size_t failed = 0;
  for (const auto& r : records) failed += r.failed ? 1 : 0;
  io.out << fmt::format("generated {} records ({} failed)\n", records.size(), failed);
  return 0;
}

int run_judge(const JudgeOptions& o, const Io& io) {
  const auto cfg = load_config(o.judge);
  const auto gcfg = gateway_config(cfg, o.gateway);
  scoring::JudgeConfig jc;
  jc.judge_id = o.judge_id.value_or(cfg.get_string_or("judge.judge_id", gcfg.model_name));
  if (jc.judge_id.empty()) throw ConfigError("no judge id: pass --judge-id or set judge.judge_id");
  if (o.temperature) {
    jc.temperature = *o.temperature;
  } else if (auto v = cfg.get_number("judge.temperature")) {
    jc.temperature = *v;
  }
  if (o.seed) {
    jc.seed = *o.seed;
  } else if (auto v = cfg.get_int("judge.seed")) {
    jc.seed = *v;
  }

  RunManifest manifest("judge", io.argv);
  manifest.add_input(o.bench);
  manifest.add_input(o.gens);
  if (o.judge) manifest.add_input(*o.judge);
  manifest.add_output(o.out);
  manifest.set_config(settings_text(cfg, &gcfg) + fmt::format("\njudge_id={}\ntemperature={}\nseed={}", jc.judge_id,
                                                              jc.temperature.value_or(gcfg.temperature),
                                                              jc.seed.value_or(-1)));
  manifest.check_outputs_distinct();

  const auto bench_set = corpus::read_instances(o.bench);
  const auto gens = corpus::read_generations(o.gens);
  gateway::ModelGateway gw(gcfg);
  const auto prompts = prompt_library(o.prompts);
  const auto judgments = scoring::run_judging(bench_set, gens, gw, prompts, jc);
  corpus::write_jsonl(o.out, judgments);
  manifest.write();
  log_gateway(gw);
  std::size_t invalid = 0;
  for (const auto& j : judgments) invalid += j.valid ? 0 : 1;
  io.out << fmt::format("judged {} generations ({} invalid)\n", judgments.size(), invalid);
  return 0;
}

int run_score(const ScoreOptions& o, const Io& io) {
  RunManifest manifest("score", io.argv);
  manifest.add_input(o.judgments);
  if (o.gens) manifest.add_input(*o.gens);
  if (o.consistency_with) manifest.add_input(*o.consistency_with);
  if (o.report) manifest.add_output(*o.report);
  manifest.check_outputs_distinct();

  auto judgments = corpus::read_judgments(o.judgments);
  std::optional<std::size_t> dropped;
  if (o.consistency_with) {
    const auto filtered = scoring::consistency_filter(judgments, corpus::read_judgments(*o.consistency_with));
    judgments.clear();
    for (const auto& [a, b] : filtered.retained) judgments.push_back(a);
    dropped = filtered.dropped;
  }
  std::vector<corpus::GenerationRecord> gens;
  if (o.gens) gens = corpus::read_generations(*o.gens);
  const auto summary = scoring::score(judgments, o.gens ? &gens : nullptr);
  if (o.report) {
    auto j = summary.to_json();
    if (dropped) j["consistency_dropped"] = *dropped;
    write_json(*o.report, j);
    manifest.write();
  }
  io.out << fmt::format("{:.4f}\n", summary.overall);
  return 0;
}

int run_metrics(const MetricsOptions& o, const Io& io) {
  const auto cfg = load_config(o.perplexity_model);
  RunManifest manifest("metrics", io.argv);
  manifest.add_input(o.bench);
  manifest.add_input(o.gens);
  if (o.report) manifest.add_output(*o.report);
  manifest.check_outputs_distinct();

  const auto bench_set = corpus::read_instances(o.bench);
  const auto gens = corpus::read_generations(o.gens);
  const auto report = scoring::format_report(bench_set, gens);
  auto j = report.to_json();

  if (o.perplexity_model) {
    const auto gcfg = gateway_config(cfg, o.gateway);
    manifest.set_config(settings_text(cfg, &gcfg));
    gateway::ModelGateway gw(gcfg);
    const auto prompts = prompt_library(o.prompts);
    const auto shots = inference::load_exemplars(o.exemplars.value_or(inference::default_exemplars_path()));
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    try {
      double sum = 0.0;
      for (const auto& inst : bench_set) {
        const double ppl = scoring::reference_step_perplexity(inst, gw, prompts, shots);
        per[inst.id] = ppl;
        sum += ppl;
      }
      j["perplexity"] = {{"mean", bench_set.empty() ? 0.0 : sum / static_cast<double>(bench_set.size())},
                         {"per_instance", std::move(per)}};
    } catch (const CapabilityError& e) {
      spdlog::warn("skipping perplexity: {}", e.what());
      j["perplexity"] = {{"error", "capability"}, {"message", e.what()}};
    }
  }
  if (o.report) {
    write_json(*o.report, j);
    manifest.write();
  }
  io.out << j.dump(2) << "\n";
  return 0;
}

int run_agree(const AgreeOptions& o, const Io& io) {
  RunManifest manifest("agree", io.argv);
  manifest.add_input(o.annotations);
  if (o.judgments) manifest.add_input(*o.judgments);
  manifest.add_output(o.report);
  manifest.check_outputs_distinct();

  const auto annotations = corpus::read_annotations(o.annotations);
  std::vector<corpus::JudgmentRecord> judgments;
  if (o.judgments) judgments = corpus::read_judgments(*o.judgments);
  const auto report = agreement::agreement_report(agreement::collect_agreement_inputs(annotations, judgments));
  write_json(o.report, report);
  manifest.write();
  io.out << report.dump(2) << "\n";
  return 0;
}

int run_regress(const RegressOptions& o, const Io& io) {
  RunManifest manifest("analyze regress", io.argv);
  manifest.add_input(o.bench);
  manifest.add_input(o.gens);
  manifest.add_input(o.judgments);
  manifest.add_output(o.report);
  manifest.set_config(fmt::format("lambda={}\nlevel={}", o.lambda, o.level));
  manifest.check_outputs_distinct();

  analysis::RegressionSpec spec;
  spec.l2_lambda = o.lambda;
  const auto examples = analysis::regression_examples(corpus::read_instances(o.bench), corpus::read_generations(o.gens),
                                                      corpus::read_judgments(o.judgments));
  const auto fit = analysis::fit_logistic(examples, spec);
  if (!fit.reliable()) {
    spdlog::warn("regression fit unreliable (converged={}, separation={}); intervals are not trustworthy",
                 fit.converged, fit.separation);
  }
  write_text(o.report, analysis::odds_ratio_csv(analysis::odds_ratios(fit, o.level)));
  manifest.write();
  io.out << fmt::format("fitted {} coefficients on {} examples ({} excluded) in {} iterations\n", fit.beta.size(),
                        fit.n_used, fit.n_excluded, fit.iterations);
  return 0;
}

namespace {

std::vector<std::pair<std::string, double>> read_checkpoint_values(const Path& path, const char* field) {
  std::vector<std::pair<std::string, double>> out;
  corpus::for_each_line(path, [&](std::string_view line) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      out.emplace_back(j.at("checkpoint").get<std::string>(), j.at(field).get<double>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("expected {\"checkpoint\", \"") + field + "\"}: " + e.what());
    }
  });
  return out;
}

}  // namespace

int run_rankcorr(const RankCorrOptions& o, const Io& io) {
  RunManifest manifest("analyze rankcorr", io.argv);
  manifest.add_input(o.scores);
  manifest.add_input(o.ppls);
  manifest.add_output(o.report);
  manifest.check_outputs_distinct();

  const auto scores = read_checkpoint_values(o.scores, "score");
  std::unordered_map<std::string, double> ppl;
  for (const auto& [ckpt, v] : read_checkpoint_values(o.ppls, "ppl")) ppl[ckpt] = v;
  std::vector<analysis::CheckpointRecord> records;
  for (const auto& [ckpt, s] : scores) {
    const auto it = ppl.find(ckpt);
    if (it == ppl.end()) throw AlignmentError("checkpoint '" + ckpt + "' has no perplexity");
    records.push_back({ckpt, s, it->second});
  }
  if (records.size() != ppl.size()) throw AlignmentError("perplexity file lists checkpoints without scores");
  const auto ranking = analysis::rank_checkpoints(records);
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < records.size(); ++i) {
    rows.push_back({{"checkpoint", records[i].checkpoint},
                    {"score", records[i].score},
                    {"ppl", records[i].ppl},
                    {"score_rank", ranking.score_rank[i]},
                    {"ppl_rank", ranking.ppl_rank[i]}});
  }
  write_json(o.report, {{"rho", ranking.rho}, {"checkpoints", std::move(rows)}});
  manifest.write();
  io.out << fmt::format("{:.3f}\n", ranking.rho);
  return 0;
}

int run_reward_serve(const RewardServeOptions& o, const Io& io) {
  const auto cfg = load_config(o.judge);
  const auto gcfg = gateway_config(cfg, o.gateway);
  rewards::RewardConfig rc;
  rc.length.tau = o.tau;
  rc.length.alpha = o.alpha;
  rc.token_scheme = o.token_scheme.value_or(cfg.get_string_or("reward.token_scheme", "whitespace"));
  rc.weights.judge = cfg.get_number_or("reward.weight_judge", 1.0);
  rc.weights.format = cfg.get_number_or("reward.weight_format", 1.0);
  rc.weights.length = cfg.get_number_or("reward.weight_length", 1.0);
  rc.judge.judge_id = cfg.get_string_or("judge.judge_id", gcfg.model_name);

  gateway::ModelGateway gw(gcfg);
  const auto prompts = prompt_library(o.prompts);
  rewards::RewardService service(corpus::read_instances(o.bench), gw, prompts, corpus::default_registry(), rc);
  util::HttpHost host([&](const util::HttpRequest& r) { return service.handle(r); });
  io.err << fmt::format("reward service on {}:{} ({} instances)\n", o.host, o.port, service.instance_count());
  host.listen(o.host, o.port);
  return 0;
}

int run_annotate_serve(const AnnotateServeOptions& o, const Io& io) {
  annotation::ServiceConfig sc;
  sc.annotators_per_item = o.k;
  if (o.store) {
    sc.store_path = *o.store;
  } else {
    sc.store_path = o.pool;
    sc.store_path += ".annotations.jsonl";
  }
  if (const char* token = std::getenv("HOW2_ADMIN_TOKEN")) sc.admin_token = token;
  annotation::AnnotationService service(annotation::read_pool(o.pool), sc);
  util::HttpHost host([&](const util::HttpRequest& r) { return service.handle(r); });
  io.err << fmt::format("annotation service on {}:{} ({} pool items, store {})\n", o.host, o.port,
                        service.pool().size(), sc.store_path.string());
  if (sc.admin_token.empty()) io.err << "HOW2_ADMIN_TOKEN is unset; /v1/export is disabled\n";
  host.listen(o.host, o.port);
  return 0;
}

}  // namespace how2::cli

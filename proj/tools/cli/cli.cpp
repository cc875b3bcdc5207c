#include "cli/cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <functional>
#include <ostream>

#include <nlohmann/json.hpp>

#include "cli/commands.hpp"
#include "how2/util/error.hpp"
#include "how2/version.hpp"

namespace how2::cli {

namespace {

void add_gateway_flags(CLI::App* app, GatewayFlags& g) {
  app->add_option("--endpoint-url", g.endpoint_url, "Override gateway.endpoint_url");
  app->add_option("--model-name", g.model_name, "Override gateway.model_name");
  app->add_option("--cache-dir", g.cache_dir, "Override gateway.cache_dir");
  app->add_option("--max-in-flight", g.max_in_flight, "Override gateway.max_in_flight")->check(CLI::PositiveNumber);
  app->add_flag("--offline", g.offline, "Serve only cached responses");
}

void use_stderr_logger() {
  static const bool once = [] {
    auto logger = spdlog::stderr_color_mt("how2");
    spdlog::set_default_logger(logger);
    return true;
  }();
  (void)once;
}

void print_error(std::ostream& err, const std::string& category, const std::string& message) {
  err << nlohmann::json{{"error", category}, {"message", message}}.dump() << "\n";
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  use_stderr_logger();
  CLI::App app{"Procedural knowledge benchmark toolkit", "how2"};
  app.set_version_flag("--version", std::string(how2::version()));
  app.require_subcommand(1);
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Only log errors");

  std::function<int()> action;
  Io io{out, err, args};

  MineOptions mine;
  auto* c = app.add_subcommand("mine", "Mine procedures from source documents");
  c->add_option("--docs", mine.docs, "Source documents (JSONL)")->required();
  c->add_option("--out", mine.out, "Mined instances (JSONL)")->required();
  c->add_option("--report", mine.report, "Stage yield report (JSON)")->required();
  c->add_option("--config", mine.config, "TOML config with [gateway] and [heuristics]");
  c->add_option("--prompts", mine.prompts, "Prompt template directory");
  add_gateway_flags(c, mine.gateway);
  c->callback([&] { action = [&] { return run_mine(mine, io); }; });

  DedupOptions dedup;
  c = app.add_subcommand("dedup", "Score candidates against the training pool by embedding similarity");
  c->add_option("--eval", dedup.eval, "Candidate instances (JSONL)")->required();
  c->add_option("--train", dedup.train, "Training instances (JSONL)")->required();
  c->add_option("--report", dedup.report, "Similarity report (JSONL)")->required();
  c->add_option("--out", dedup.out, "Retained candidates (JSONL)");
  c->add_option("--tau", dedup.tau, "Maximum retained cosine")->capture_default_str()->check(CLI::Range(-1.0, 1.0));
  c->add_option("--config", dedup.config, "TOML config with [gateway]");
  add_gateway_flags(c, dedup.gateway);
  c->callback([&] { action = [&] { return run_dedup(dedup, io); }; });

  BenchOptions bench;
  c = app.add_subcommand("bench", "Sample a topic-balanced benchmark");
  c->add_option("--in", bench.in, "Instances (JSONL)")->required();
  c->add_option("--out", bench.out, "Benchmark split (JSONL)")->required();
  c->add_option("--train-out", bench.train_out, "Remaining training pool (JSONL)");
  c->add_option("--per-topic", bench.per_topic, "Instances per topic")->capture_default_str();
  c->add_option("--seed", bench.seed, "Sampling seed")->capture_default_str();
  c->callback([&] { action = [&] { return run_bench(bench, io); }; });

  GenerateOptions gen;
  c = app.add_subcommand("generate", "Generate steps for a benchmark split");
  c->add_option("--bench", gen.bench, "Benchmark split (JSONL)")->required();
  c->add_option("--out", gen.out, "Generations (JSONL)")->required();
  c->add_option("--model", gen.model, "Model TOML config");
  c->add_option("--variant", gen.variant, "Prompt variant")
      ->check(CLI::IsMember({"base", "instruct", "reasoning"}))
      ->capture_default_str();
  c->add_option("--model-id", gen.model_id, "Model id recorded in outputs");
  c->add_option("--exemplars", gen.exemplars, "Few-shot exemplars (JSON)");
  c->add_option("--prompts", gen.prompts, "Prompt template directory");
  c->add_option("--token-scheme", gen.token_scheme, "Tokenizer for length accounting");
  c->add_option("--max-tokens", gen.max_tokens, "Generation budget")->check(CLI::PositiveNumber);
  add_gateway_flags(c, gen.gateway);
  c->callback([&] { action = [&] { return run_generate(gen, io); }; });

  JudgeOptions judge;
  c = app.add_subcommand("judge", "Judge generations against reference steps");
  c->add_option("--bench", judge.bench, "Benchmark split (JSONL)")->required();
  c->add_option("--gens", judge.gens, "Generations (JSONL)")->required();
  c->add_option("--out", judge.out, "Judgments (JSONL)")->required();
  c->add_option("--judge", judge.judge, "Judge TOML config");
  c->add_option("--judge-id", judge.judge_id, "Judge id recorded in outputs");
  c->add_option("--temperature", judge.temperature, "Judge sampling temperature");
  c->add_option("--seed", judge.seed, "Judge sampling seed");
  c->add_option("--prompts", judge.prompts, "Prompt template directory");
  add_gateway_flags(c, judge.gateway);
  c->callback([&] { action = [&] { return run_judge(judge, io); }; });

  ScoreOptions score;
  c = app.add_subcommand("score", "Aggregate judgments into benchmark scores");
  c->add_option("--judgments", score.judgments, "Judgments (JSONL)")->required();
  c->add_option("--gens", score.gens, "Generations, for length statistics (JSONL)");
  c->add_option("--report", score.report, "Score summary (JSON)");
  c->add_option("--consistency-with", score.consistency_with, "Second judging run; keep agreeing pairs only");
  c->callback([&] { action = [&] { return run_score(score, io); }; });

  MetricsOptions metrics;
  c = app.add_subcommand("metrics", "Format diagnostics and optional perplexity");
  c->add_option("--bench", metrics.bench, "Benchmark split (JSONL)")->required();
  c->add_option("--gens", metrics.gens, "Generations (JSONL)")->required();
  c->add_option("--report", metrics.report, "Metrics report (JSON)");
  c->add_option("--perplexity-model", metrics.perplexity_model, "Model TOML config for reference perplexity");
  c->add_option("--exemplars", metrics.exemplars, "Few-shot exemplars (JSON)");
  c->add_option("--prompts", metrics.prompts, "Prompt template directory");
  add_gateway_flags(c, metrics.gateway);
  c->callback([&] { action = [&] { return run_metrics(metrics, io); }; });

  AgreeOptions agree;
  c = app.add_subcommand("agree", "Inter-annotator and judge agreement");
  c->add_option("--annotations", agree.annotations, "Human annotations (JSONL)")->required();
  c->add_option("--judgments", agree.judgments, "Judge verdicts to compare (JSONL)");
  c->add_option("--report", agree.report, "Agreement report (JSON)")->required();
  c->callback([&] { action = [&] { return run_agree(agree, io); }; });

  auto* analyze = app.add_subcommand("analyze", "Statistical analyses");
  analyze->require_subcommand(1);

  RegressOptions regress;
  c = analyze->add_subcommand("regress", "Logistic regression of no-failure outcomes");
  c->add_option("--bench", regress.bench, "Benchmark split (JSONL)")->required();
  c->add_option("--gens", regress.gens, "Generations (JSONL)")->required();
  c->add_option("--judgments", regress.judgments, "Judgments (JSONL)")->required();
  c->add_option("--report", regress.report, "Odds-ratio table (CSV)")->required();
  c->add_option("--lambda", regress.lambda, "L2 penalty")->capture_default_str()->check(CLI::NonNegativeNumber);
  c->add_option("--level", regress.level, "Confidence level")->capture_default_str()->check(CLI::Range(0.5, 0.9999));
  c->callback([&] { action = [&] { return run_regress(regress, io); }; });

  RankCorrOptions rank;
  c = analyze->add_subcommand("rankcorr", "Rank correlation of checkpoint scores and perplexities");
  c->add_option("--scores", rank.scores, "{checkpoint, score} lines (JSONL)")->required();
  c->add_option("--ppls", rank.ppls, "{checkpoint, ppl} lines (JSONL)")->required();
  c->add_option("--report", rank.report, "Ranking report (JSON)")->required();
  c->callback([&] { action = [&] { return run_rankcorr(rank, io); }; });

  RewardServeOptions reward;
  c = app.add_subcommand("reward-serve", "Serve rollout rewards over HTTP");
  c->add_option("--bench", reward.bench, "Instances with reference steps (JSONL)")->required();
  c->add_option("--judge", reward.judge, "Judge TOML config");
  c->add_option("--host", reward.host, "Bind address")->capture_default_str();
  c->add_option("--port", reward.port, "Bind port")->capture_default_str()->check(CLI::Range(0, 65535));
  c->add_option("--token-scheme", reward.token_scheme, "Tokenizer for length reward");
  c->add_option("--tau", reward.tau, "Length tolerance")->capture_default_str();
  c->add_option("--alpha", reward.alpha, "Length penalty slope")->capture_default_str();
  c->add_option("--prompts", reward.prompts, "Prompt template directory");
  add_gateway_flags(c, reward.gateway);
  c->callback([&] { action = [&] { return run_reward_serve(reward, io); }; });

  AnnotateServeOptions annotate;
  c = app.add_subcommand("annotate-serve", "Serve the annotation task API over HTTP");
  c->add_option("--pool", annotate.pool, "Annotation pool (JSONL)")->required();
  c->add_option("--k", annotate.k, "Annotators per item")->capture_default_str()->check(CLI::PositiveNumber);
  c->add_option("--host", annotate.host, "Bind address")->capture_default_str();
  c->add_option("--port", annotate.port, "Bind port")->capture_default_str()->check(CLI::Range(0, 65535));
  c->add_option("--store", annotate.store, "Append-only annotation store (JSONL)");
  c->callback([&] { action = [&] { return run_annotate_serve(annotate, io); }; });

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  spdlog::set_level(quiet ? spdlog::level::err : verbose ? spdlog::level::debug : spdlog::level::info);
  if (!action) return kExitUsage;
  try {
    return action();
  } catch (const how2::Error& e) {
    print_error(err, std::string(to_string(e.category())), e.what());
  } catch (const nlohmann::json::exception& e) {
    print_error(err, "parse", e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    print_error(err, "io", e.what());
  } catch (const std::exception& e) {
    print_error(err, "internal", e.what());
  }
  return kExitFailure;
}

}  // namespace how2::cli

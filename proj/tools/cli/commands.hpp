#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace how2::cli {

using Path = std::filesystem::path;

struct Io {
  std::ostream& out;
  std::ostream& err;
  std::vector<std::string> argv;
};

// Command-line overrides for a [gateway] section; they win over env and file.
struct GatewayFlags {
  std::optional<std::string> endpoint_url;
  std::optional<std::string> model_name;
  std::optional<std::string> cache_dir;
  std::optional<std::size_t> max_in_flight;
  bool offline = false;
};

struct MineOptions {
  Path docs, out, report;
  std::optional<Path> config;
  std::optional<Path> prompts;
  GatewayFlags gateway;
};

struct DedupOptions {
  Path eval, train, report;
  std::optional<Path> out;  // retained eval instances
  double tau = 0.65;
  std::optional<Path> config;
  GatewayFlags gateway;
};

struct BenchOptions {
  Path in, out;
  std::optional<Path> train_out;
  std::size_t per_topic = 500;
  std::uint64_t seed = 17;
};

struct GenerateOptions {
  Path bench, out;
  std::optional<Path> model;
  std::string variant = "instruct";
  std::optional<std::string> model_id;
  std::optional<Path> exemplars;
  std::optional<Path> prompts;
  std::optional<std::string> token_scheme;
  std::optional<int> max_tokens;
  GatewayFlags gateway;
};

struct JudgeOptions {
  Path bench, gens, out;
  std::optional<Path> judge;
  std::optional<std::string> judge_id;
  std::optional<double> temperature;
  std::optional<std::int64_t> seed;
  std::optional<Path> prompts;
  GatewayFlags gateway;
};

struct ScoreOptions {
  Path judgments;
  std::optional<Path> gens;
  std::optional<Path> report;
  std::optional<Path> consistency_with;  // second judging run
};

struct MetricsOptions {
  Path bench, gens;
  std::optional<Path> report;
  std::optional<Path> perplexity_model;  // enables conditional perplexity
  std::optional<Path> exemplars;
  std::optional<Path> prompts;
  GatewayFlags gateway;
};

struct AgreeOptions {
  Path annotations;
  std::optional<Path> judgments;
  Path report;
};

struct RegressOptions {
  Path bench, gens, judgments, report;
  double lambda = 1e-6;
  double level = 0.95;
};

struct RankCorrOptions {
  Path scores, ppls, report;
};

struct RewardServeOptions {
  Path bench;
  std::optional<Path> judge;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::string> token_scheme;
  double tau = 0.2;
  double alpha = 5.0;
  std::optional<Path> prompts;
  GatewayFlags gateway;
};

struct AnnotateServeOptions {
  Path pool;
  std::size_t k = 3;
  std::string host = "127.0.0.1";
  int port = 8081;
  std::optional<Path> store;
};

int run_mine(const MineOptions& o, const Io& io);
int run_dedup(const DedupOptions& o, const Io& io);
int run_bench(const BenchOptions& o, const Io& io);
int run_generate(const GenerateOptions& o, const Io& io);
int run_judge(const JudgeOptions& o, const Io& io);
int run_score(const ScoreOptions& o, const Io& io);
int run_metrics(const MetricsOptions& o, const Io& io);
int run_agree(const AgreeOptions& o, const Io& io);
int run_regress(const RegressOptions& o, const Io& io);
int run_rankcorr(const RankCorrOptions& o, const Io& io);
int run_reward_serve(const RewardServeOptions& o, const Io& io);
int run_annotate_serve(const AnnotateServeOptions& o, const Io& io);

}  // namespace how2::cli

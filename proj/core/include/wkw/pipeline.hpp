#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "wkw/coverage.hpp"
#include "wkw/crawler.hpp"
#include "wkw/extraction.hpp"
#include "wkw/gap_analysis.hpp"
#include "wkw/kg.hpp"
#include "wkw/link_prediction.hpp"
#include "wkw/resolution.hpp"
#include "wkw/simweb.hpp"

namespace wkw {

enum class Backend { Simulated, Live };

struct PipelineConfig {
  CrawlStrategy strategy = CrawlStrategy::Wkw;
  int max_iterations = 5;
  std::size_t budget = 213;
  PriorityWeights weights;
  double relation_threshold = kRelationConfidenceThreshold;
  double merge_threshold = kMergeThreshold;
  StoppingConfig stopping;

  bool gap_analysis = true;  // only the full-loop strategy ever reseeds
  std::size_t seeds_per_query = kSeedsPerQuery;
  int signal_lifetime = 2;
  std::vector<std::string> keywords = {"suppliers", "manufacturers"};
  std::vector<std::string> directory_templates;  // live query endpoints, "{query}" placeholder

  bool distmult = true;
  DistMultConfig distmult_config;
  std::size_t predictions_k = 20;

  OccasionKind coverage_mode = OccasionKind::Source;
  std::size_t bootstrap_replicates = 200;

  std::string seeds_file;
  std::string priors_file;
  std::string world_file;
  std::string truth_file;

  Backend backend = Backend::Simulated;
  std::chrono::milliseconds per_domain_delay{1500};
  std::size_t max_concurrency = 10;
  std::chrono::seconds fetch_timeout{10};
  bool count_cache_hits = false;
  std::string cache_dir;  // page and extraction cache; empty disables

  ExtractorConfig extractor;
  std::uint64_t seed = 42;

  // Throws ConfigError.
  void validate() const;
};

// Overlays a JSON document onto `base`. Unknown keys are rejected. Relative
// input paths are resolved against `base_dir` when it is non-empty.
PipelineConfig parse_config(std::string_view json_text, PipelineConfig base = {},
                            const std::string& base_dir = {});
// Throws ConfigError when the file is missing or malformed.
PipelineConfig load_config(const std::string& path, PipelineConfig base = {});
std::string config_to_json(const PipelineConfig& config);

struct IterationReport {
  int iteration = 0;
  std::size_t pages = 0;             // charged this iteration
  std::size_t cumulative_pages = 0;
  std::size_t new_entities = 0;
  std::size_t cumulative_entities = 0;
  std::size_t cumulative_companies = 0;
  std::size_t cumulative_relations = 0;
  std::size_t raw_companies = 0;     // distinct company mentions before resolution
  CoverageEstimate coverage;
  std::optional<std::size_t> true_positives;
  std::optional<double> c_true;
  std::optional<double> coverage_error;
  std::size_t gap_signals = 0;
  std::size_t gap_urls = 0;
  double elapsed_seconds = 0.0;
  StopDecision decision = StopDecision::Continue;
};

struct PipelineInputs {
  std::vector<Seed> seeds;
  Priors priors;
  Fetcher* fetcher = nullptr;
  const QueryResolver* resolver = nullptr;  // required for gap reseeding
  const WorldTruth* truth = nullptr;        // enables evaluation columns
};

struct RunResult {
  KnowledgeGraph graph;      // resolved, filtered
  KnowledgeGraph raw_graph;  // every extracted relation, unfiltered
  std::vector<KnowledgeGraph> snapshots;  // G_1..G_t
  std::vector<IterationReport> iterations;
  std::vector<IterationPredictions> predictions;
  std::vector<RetroEvalRow> retro;
  std::vector<FetchLogEntry> fetch_log;
  std::vector<MergeRecord> merge_log;
  std::vector<GapSignal> signal_log;
  std::vector<std::string> gap_urls_queued;
  std::optional<EvalMetrics> evaluation;
  std::size_t planted_found = 0;
  std::size_t pages_used = 0;
  StopDecision stop = StopDecision::Continue;
  std::size_t extractor_calls = 0;
};

RunResult run_pipeline(const PipelineConfig& config, const PipelineInputs& inputs);

// Everything a simulated run needs, loaded once and shared across strategies.
struct SimulatedSetup {
  SimulatedWeb web;
  std::optional<WorldTruth> truth;
  std::vector<Seed> seeds;
  Priors priors;
  DirectoryIndex index;
};

SimulatedSetup make_setup(World world);
// Reads world/seeds/priors/truth files named in the config.
SimulatedSetup load_setup(const PipelineConfig& config);

RunResult run_simulated(const PipelineConfig& config, const SimulatedSetup& setup);
// Live HTTP backend with optional disk cache; directory templates resolve queries.
RunResult run_live(const PipelineConfig& config);

struct ComparisonRow {
  CrawlStrategy strategy = CrawlStrategy::Bfs;
  EvalMetrics metrics;
  std::size_t pages = 0;
  std::size_t entities = 0;
  std::size_t relations = 0;
  std::size_t planted_found = 0;
};

// Throws ConfigError unless every config has the same budget.
std::vector<ComparisonRow> run_comparison(const std::vector<PipelineConfig>& configs,
                                          const SimulatedSetup& setup);
// The four strategies under one base config.
std::vector<ComparisonRow> run_comparison(const PipelineConfig& base, const SimulatedSetup& setup);

ComparisonRow comparison_row(CrawlStrategy strategy, const RunResult& run);

// ---- reports ----

struct ReportBundle {
  std::vector<ComparisonRow> comparison;
  std::vector<IterationReport> iterations;
  TypeConsistencyReport type_consistency;
  std::vector<RetroEvalRow> retro;
  std::vector<CurvePoint> discovery_curve;  // (cumulative pages, cumulative entities)
  std::optional<AccumulationFit> accumulation;
  std::optional<LinearFit> linear;
};

ReportBundle bundle_from_run(const RunResult& run);

// Writes CSV and JSON for every table into `dir`. Throws IoError.
void emit_reports(const ReportBundle& bundle, const std::string& dir);

std::string bundle_to_json(const ReportBundle& bundle);
ReportBundle bundle_from_json(std::string_view text);

// Full run directory: reports/, kg_snapshots/G_t.jsonl, logs/, run.json.
void write_run_directory(const RunResult& run, const PipelineConfig& config, const std::string& dir);

inline constexpr const char* kCoverageColumns = "iter,observed,S_hat,C_hat,C_true,error,f1,f2";

}  // namespace wkw

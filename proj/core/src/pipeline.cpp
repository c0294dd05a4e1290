#include "wkw/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wkw/error.hpp"
#include "wkw/text.hpp"
#include "wkw/url.hpp"

namespace wkw {

using nlohmann::json;
namespace fs = std::filesystem;

void PipelineConfig::validate() const {
  if (max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
  weights.validate();
  stopping.validate();
  if (!(relation_threshold >= 0.0 && relation_threshold <= 1.0))
    throw ConfigError("relation threshold must lie in [0,1]");
  if (!(merge_threshold >= 0.0 && merge_threshold <= 1.0))
    throw ConfigError("merge threshold must lie in [0,1]");
  if (seeds_per_query < 1) throw ConfigError("seeds_per_query must be at least 1");
  if (signal_lifetime < 1) throw ConfigError("signal_lifetime must be at least 1");
  if (distmult_config.dim < 1) throw ConfigError("distmult dim must be positive");
  if (distmult_config.epochs < 0) throw ConfigError("distmult epochs must be non-negative");
  if (!(distmult_config.learning_rate > 0)) throw ConfigError("distmult learning rate must be positive");
  if (max_concurrency < 1) throw ConfigError("max_concurrency must be at least 1");
  if (per_domain_delay.count() < 0) throw ConfigError("per-domain delay must be non-negative");
}

namespace {

[[noreturn]] void unknown_key(const std::string& section, const std::string& key) {
  throw ConfigError("unknown config key '" + (section.empty() ? key : section + "." + key) + "'");
}

template <typename T>
T get(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

std::string resolve_path(const std::string& p, const std::string& base_dir) {
  if (p.empty() || base_dir.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base_dir) / p).lexically_normal().string();
}

void apply_config(const json& j, PipelineConfig& c, const std::string& base_dir) {
  if (!j.is_object()) throw ConfigError("config root must be an object");
  for (const auto& [key, v] : j.items()) {
    if (key == "strategy") {
      auto s = parse_strategy(get<std::string>(v, key));
      if (!s) throw ConfigError("unknown strategy '" + v.dump() + "'");
      c.strategy = *s;
    } else if (key == "max_iterations") {
      c.max_iterations = get<int>(v, key);
    } else if (key == "budget") {
      long b = get<long>(v, key);
      if (b < 0) throw ConfigError("budget must be non-negative");
      c.budget = static_cast<std::size_t>(b);
    } else if (key == "seed") {
      c.seed = get<std::uint64_t>(v, key);
    } else if (key == "weights") {
      for (const auto& [k, w] : v.items()) {
        if (k == "alpha") c.weights.alpha = get<double>(w, k);
        else if (k == "beta") c.weights.beta = get<double>(w, k);
        else if (k == "gamma") c.weights.gamma = get<double>(w, k);
        else unknown_key(key, k);
      }
    } else if (key == "thresholds") {
      for (const auto& [k, w] : v.items()) {
        if (k == "relation") c.relation_threshold = get<double>(w, k);
        else if (k == "merge") c.merge_threshold = get<double>(w, k);
        else unknown_key(key, k);
      }
    } else if (key == "stopping") {
      for (const auto& [k, w] : v.items()) {
        if (k == "tau") c.stopping.tau = get<double>(w, k);
        else if (k == "delta") c.stopping.delta = get<long>(w, k);
        else if (k == "consecutive") c.stopping.consecutive = get<std::size_t>(w, k);
        else unknown_key(key, k);
      }
    } else if (key == "gaps") {
      for (const auto& [k, w] : v.items()) {
        if (k == "enabled") c.gap_analysis = get<bool>(w, k);
        else if (k == "seeds_per_query") c.seeds_per_query = get<std::size_t>(w, k);
        else if (k == "signal_lifetime") c.signal_lifetime = get<int>(w, k);
        else if (k == "keywords") c.keywords = get<std::vector<std::string>>(w, k);
        else if (k == "directory_templates") c.directory_templates = get<std::vector<std::string>>(w, k);
        else unknown_key(key, k);
      }
    } else if (key == "distmult") {
      for (const auto& [k, w] : v.items()) {
        if (k == "enabled") c.distmult = get<bool>(w, k);
        else if (k == "dim") c.distmult_config.dim = get<std::size_t>(w, k);
        else if (k == "epochs") c.distmult_config.epochs = get<int>(w, k);
        else if (k == "learning_rate") c.distmult_config.learning_rate = get<double>(w, k);
        else if (k == "init_range") c.distmult_config.init_range = get<double>(w, k);
        else if (k == "top_k") c.predictions_k = get<std::size_t>(w, k);
        else if (k == "optimizer") {
          auto o = parse_optimizer(get<std::string>(w, k));
          if (!o) throw ConfigError("unknown optimizer " + w.dump());
          c.distmult_config.optimizer = *o;
        } else unknown_key(key, k);
      }
    } else if (key == "coverage") {
      for (const auto& [k, w] : v.items()) {
        if (k == "bootstrap_replicates") c.bootstrap_replicates = get<std::size_t>(w, k);
        else if (k == "mode") {
          std::string m = to_lower(get<std::string>(w, k));
          if (m == "source") c.coverage_mode = OccasionKind::Source;
          else if (m == "iteration") c.coverage_mode = OccasionKind::Iteration;
          else throw ConfigError("coverage.mode must be 'source' or 'iteration'");
        } else unknown_key(key, k);
      }
    } else if (key == "inputs") {
      for (const auto& [k, w] : v.items()) {
        std::string p = resolve_path(get<std::string>(w, k), base_dir);
        if (k == "seeds") c.seeds_file = p;
        else if (k == "priors") c.priors_file = p;
        else if (k == "world") c.world_file = p;
        else if (k == "truth") c.truth_file = p;
        else unknown_key(key, k);
      }
    } else if (key == "backend") {
      for (const auto& [k, w] : v.items()) {
        if (k == "kind") {
          std::string b = to_lower(get<std::string>(w, k));
          if (b == "simulated") c.backend = Backend::Simulated;
          else if (b == "live") c.backend = Backend::Live;
          else throw ConfigError("backend.kind must be 'simulated' or 'live'");
        } else if (k == "per_domain_delay_ms") {
          c.per_domain_delay = std::chrono::milliseconds(get<long>(w, k));
        } else if (k == "max_concurrency") {
          c.max_concurrency = get<std::size_t>(w, k);
        } else if (k == "timeout_s") {
          c.fetch_timeout = std::chrono::seconds(get<long>(w, k));
        } else if (k == "count_cache_hits") {
          c.count_cache_hits = get<bool>(w, k);
        } else if (k == "cache_dir") {
          c.cache_dir = resolve_path(get<std::string>(w, k), base_dir);
        } else unknown_key(key, k);
      }
    } else if (key == "extractor") {
      for (const auto& [k, w] : v.items()) {
        if (k == "kind") {
          std::string e = to_lower(get<std::string>(w, k));
          if (e == "fixture") c.extractor.kind = ExtractorKind::FixtureRules;
          else if (e == "recorded") c.extractor.kind = ExtractorKind::ExternalLlmStub;
          else throw ConfigError("extractor.kind must be 'fixture' or 'recorded'");
        } else if (k == "recorded_responses") {
          c.extractor.recorded_responses = resolve_path(get<std::string>(w, k), base_dir);
        } else if (k == "cache_ttl_days") {
          c.extractor.cache_ttl = std::chrono::hours(24 * get<long>(w, k));
        } else unknown_key(key, k);
      }
    } else {
      unknown_key("", key);
    }
  }
}

}  // namespace

PipelineConfig parse_config(std::string_view text, PipelineConfig base, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  apply_config(j, base, base_dir);
  base.validate();
  return base;
}

PipelineConfig load_config(const std::string& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::move(base), fs::path(path).parent_path().string());
}

std::string config_to_json(const PipelineConfig& c) {
  json j;
  j["strategy"] = to_string(c.strategy);
  j["max_iterations"] = c.max_iterations;
  j["budget"] = c.budget;
  j["seed"] = c.seed;
  j["weights"] = {{"alpha", c.weights.alpha}, {"beta", c.weights.beta}, {"gamma", c.weights.gamma}};
  j["thresholds"] = {{"relation", c.relation_threshold}, {"merge", c.merge_threshold}};
  j["stopping"] = {{"tau", c.stopping.tau}, {"delta", c.stopping.delta}, {"consecutive", c.stopping.consecutive}};
  j["gaps"] = {{"enabled", c.gap_analysis},
               {"seeds_per_query", c.seeds_per_query},
               {"signal_lifetime", c.signal_lifetime},
               {"keywords", c.keywords},
               {"directory_templates", c.directory_templates}};
  j["distmult"] = {{"enabled", c.distmult},
                   {"dim", c.distmult_config.dim},
                   {"epochs", c.distmult_config.epochs},
                   {"learning_rate", c.distmult_config.learning_rate},
                   {"init_range", c.distmult_config.init_range},
                   {"optimizer", to_string(c.distmult_config.optimizer)},
                   {"top_k", c.predictions_k}};
  j["coverage"] = {{"bootstrap_replicates", c.bootstrap_replicates},
                   {"mode", c.coverage_mode == OccasionKind::Source ? "source" : "iteration"}};
  j["inputs"] = {{"seeds", c.seeds_file}, {"priors", c.priors_file}, {"world", c.world_file}, {"truth", c.truth_file}};
  j["backend"] = {{"kind", c.backend == Backend::Simulated ? "simulated" : "live"},
                  {"per_domain_delay_ms", c.per_domain_delay.count()},
                  {"max_concurrency", c.max_concurrency},
                  {"timeout_s", c.fetch_timeout.count()},
                  {"count_cache_hits", c.count_cache_hits},
                  {"cache_dir", c.cache_dir}};
  j["extractor"] = {{"kind", c.extractor.kind == ExtractorKind::FixtureRules ? "fixture" : "recorded"},
                    {"recorded_responses", c.extractor.recorded_responses},
                    {"cache_ttl_days", std::chrono::duration_cast<std::chrono::hours>(c.extractor.cache_ttl).count() / 24}};
  return j.dump(2);
}

namespace {

std::string entity_key(const Entity& e) {
  return std::string(to_string(e.type)) + ":" + e.canonical_name;
}

// Adds one page's extraction to the working graph (filtered) and the raw graph.
void integrate(const ExtractionResult& r, const std::string& url, int t, KnowledgeGraph& g,
               KnowledgeGraph& raw, double theta) {
  auto upsert = [&](KnowledgeGraph& graph, const std::string& name, EntityType type) -> std::optional<EntityId> {
    try {
      return graph.upsert_entity(name, type, url, t);
    } catch (const InvalidInput&) {
      return std::nullopt;
    }
  };
  for (const Mention& m : r.mentions) {
    upsert(g, m.surface, m.type);
    upsert(raw, m.surface, m.type);
  }
  for (const Triple& tr : r.triples) {
    auto st = r.mention_type(tr.source);
    auto tt = r.mention_type(tr.target);
    if (!st || !tt) continue;
    auto s = upsert(g, tr.source, *st), d = upsert(g, tr.target, *tt);
    if (s && d) g.add_relation({*s, *d, tr.relation, tr.confidence, url}, theta);
    auto rs = upsert(raw, tr.source, *st), rd = upsert(raw, tr.target, *tt);
    if (rs && rd) raw.add_relation_unfiltered({*rs, *rd, tr.relation, tr.confidence, url});
  }
}

IncidenceMatrix source_incidence(const KnowledgeGraph& g) {
  std::map<std::string, std::set<std::string>> by_entity;
  for (const auto& [id, e] : g.entities()) {
    auto& domains = by_entity[entity_key(e)];
    for (const auto& page : e.source_pages) domains.insert(registered_domain(page));
  }
  for (auto it = by_entity.begin(); it != by_entity.end();)
    it = it->second.empty() ? by_entity.erase(it) : std::next(it);
  return IncidenceMatrix::from_sets(by_entity);
}

std::size_t count_matches(const KnowledgeGraph& g, const std::set<std::string>& names) {
  std::size_t n = 0;
  for (const auto& [id, e] : g.entities())
    if (e.type == EntityType::Company && names.count(normalize_name(e.canonical_name))) ++n;
  return n;
}

}  // namespace

RunResult run_pipeline(const PipelineConfig& config, const PipelineInputs& inputs) {
  config.validate();
  if (!inputs.fetcher) throw ConfigError("no fetch backend configured");
  RunResult run;
  if (config.budget == 0) return run;
  if (inputs.seeds.empty()) throw ConfigError("seed list is empty");

  const bool full_loop = config.strategy == CrawlStrategy::Wkw && config.gap_analysis;
  if (full_loop && !inputs.resolver) throw ConfigError("gap reseeding needs a query resolver");

  CrawlBudget budget;
  budget.max_pages = config.budget;
  budget.per_domain_delay = config.per_domain_delay;
  budget.max_concurrency = config.max_concurrency;
  budget.count_cache_hits = config.count_cache_hits;
  Crawler crawler(config.strategy, config.weights, budget);
  crawler.add_seeds(inputs.seeds, 1);

  auto extractor = make_extractor(config.extractor);
  ExtractionCache cache(config.extractor.cache_ttl);
  const std::string cache_file =
      config.cache_dir.empty() ? std::string{} : (fs::path(config.cache_dir) / "extractions.jsonl").string();
  if (!cache_file.empty() && fs::exists(cache_file)) cache.load(cache_file);
  CachedExtractor cached(*extractor, cache);

  SignalLedger ledger(config.signal_lifetime);
  KnowledgeGraph& graph = run.graph;
  std::map<std::string, int> page_iteration;
  std::vector<double> coverage_history;
  std::vector<std::size_t> discovered_history;

  const auto T = static_cast<std::size_t>(config.max_iterations);
  const std::size_t base_cap = (config.budget + T - 1) / T;
  std::size_t rollover = 0;

  for (int t = 1; t <= config.max_iterations; ++t) {
    const auto started = std::chrono::steady_clock::now();
    graph.set_iteration(t);
    run.raw_graph.set_iteration(t);
    const std::size_t before = graph.entity_count();

    PriorityContext ctx = PriorityContext::from_graph(graph, config.keywords);
    if (full_loop) ctx.gap_severity = ledger.active_url_severity();
    crawler.begin_iteration(t, std::move(ctx));

    const std::size_t cap = base_cap + rollover;
    auto observer = [&](const PageText& page) -> double {
      ExtractionResult r = cached.extract(page);
      const std::size_t n_before = graph.entity_count();
      integrate(r, page.url, t, graph, run.raw_graph, config.relation_threshold);
      page_iteration.emplace(page.url, t);
      if (full_loop && graph.entity_count() > n_before) ledger.credit(page.url, t);
      return static_cast<double>(r.mentions.size());
    };
    CrawlIterationResult crawl = crawler.run_iteration(*inputs.fetcher, cap, observer);
    rollover = cap - std::min(cap, crawl.pages_charged);
    run.fetch_log.insert(run.fetch_log.end(), crawl.log.begin(), crawl.log.end());

    ResolveResult resolved = resolve(graph, config.merge_threshold);
    run.merge_log.insert(run.merge_log.end(), resolved.merge_log.begin(), resolved.merge_log.end());
    graph = std::move(resolved.graph);
    graph.set_iteration(t);

    IterationReport rep;
    rep.iteration = t;
    rep.pages = crawl.pages_charged;
    rep.cumulative_pages = crawler.budget().pages_used;
    rep.cumulative_entities = graph.entity_count();
    rep.new_entities = rep.cumulative_entities > before ? rep.cumulative_entities - before : 0;
    rep.cumulative_companies = graph.count(EntityType::Company);
    rep.cumulative_relations = graph.relation_count();
    rep.raw_companies = run.raw_graph.count(EntityType::Company);

    if (graph.entity_count() > 0) {
      IncidenceMatrix incidence = source_incidence(graph);
      FrequencyCounts counts;
      if (config.coverage_mode == OccasionKind::Source) {
        counts = frequency_counts(incidence);
      } else {
        std::vector<std::set<std::string>> occasions(static_cast<std::size_t>(t));
        for (const auto& [id, e] : graph.entities())
          for (const auto& p : e.source_pages) {
            auto it = page_iteration.find(p);
            if (it != page_iteration.end()) occasions[it->second - 1].insert(entity_key(e));
          }
        counts = frequency_counts(occasions);
      }
      rep.coverage = chao1(counts);
      if (incidence.source_count() >= 2 && config.bootstrap_replicates > 0) {
        try {
          auto ci = bootstrap_ci(incidence, config.bootstrap_replicates, 0.95, config.seed + t);
          rep.coverage.ci_low = ci.low;
          rep.coverage.ci_high = ci.high;
        } catch (const EstimationError&) {
        }
      }
    }
    if (inputs.truth) {
      rep.true_positives = count_matches(graph, inputs.truth->targets);
      if (!inputs.truth->targets.empty()) {
        rep.c_true = static_cast<double>(*rep.true_positives) / inputs.truth->targets.size();
        if (graph.entity_count() > 0) rep.coverage_error = coverage_error(rep.coverage.c_hat, *rep.c_true);
      }
    }
    coverage_history.push_back(rep.coverage.c_hat);
    discovered_history.push_back(rep.cumulative_entities);
    rep.decision = should_stop(coverage_history, discovered_history, config.stopping);

    const bool more = t < config.max_iterations && rep.decision == StopDecision::Continue &&
                      !crawler.budget().exhausted();
    if (config.strategy == CrawlStrategy::Wkw && more) {
      if (config.distmult && graph.relation_count() > 0) {
        DistMultConfig dm = config.distmult_config;
        dm.seed = config.seed + static_cast<std::uint64_t>(t);
        TrainResult trained = train_distmult(graph, dm);
        IterationPredictions ip{t, trained.final_loss, predict_top_k(trained.model, graph, config.predictions_k)};
        run.predictions.push_back(ip);
      }
      if (full_loop) {
        ledger.expire(t);
        std::vector<GapSignal> detected = detect_gaps(graph, inputs.priors, t);
        if (!run.predictions.empty() && run.predictions.back().iteration == t) {
          for (const PredictedLink& l : run.predictions.back().links) {
            const double p = 1.0 / (1.0 + std::exp(-l.score));
            detected.push_back(predicted_link_signal(l.head, display_name(graph.entity(l.head)), l.tail,
                                                     display_name(graph.entity(l.tail)), p, t));
          }
          sort_signals(detected);
        }
        std::vector<GapSignal> active = ledger.update(detected, t);
        for (const GapSignal& s : active)
          if (s.created_iteration == t) run.signal_log.push_back(s);
        rep.gap_signals = active.size();
        for (const GapSignal& s : active) {
          std::vector<std::string> all_urls;
          for (const std::string& q : s.queries) {
            auto urls = resolve_queries({q}, *inputs.resolver, crawler.fetched(), config.seeds_per_query);
            for (const auto& u : urls) {
              if (crawler.add_gap_url(u, s.severity, t, q)) {
                ++rep.gap_urls;
                run.gap_urls_queued.push_back(u);
              }
              all_urls.push_back(u);
            }
          }
          ledger.record_urls(s, all_urls);
        }
      }
    }

    rep.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    run.iterations.push_back(rep);
    run.snapshots.push_back(graph);
    if (rep.decision != StopDecision::Continue) {
      run.stop = rep.decision;
      break;
    }
    if (crawler.budget().exhausted() || crawler.frontier().empty()) break;
  }

  run.pages_used = crawler.budget().pages_used;
  run.extractor_calls = cached.invocations();
  if (run.snapshots.size() >= 2) run.retro = retro_eval(run.predictions, run.snapshots);
  if (inputs.truth) {
    run.evaluation = evaluate_against_truth(graph, *inputs.truth);
    run.planted_found = count_matches(graph, inputs.truth->planted);
  }
  if (!cache_file.empty()) {
    std::error_code ec;
    fs::create_directories(config.cache_dir, ec);
    cache.save(cache_file);
  }
  return run;
}

SimulatedSetup make_setup(World world) {
  SimulatedSetup s;
  s.index = DirectoryIndex::from_web(world.web);
  s.web = std::move(world.web);
  s.truth = std::move(world.truth);
  s.seeds = std::move(world.seeds);
  s.priors = std::move(world.priors);
  return s;
}

SimulatedSetup load_setup(const PipelineConfig& config) {
  if (config.world_file.empty()) throw ConfigError("simulated backend needs inputs.world");
  // Unset companions fall back to the files written next to the world.
  const WorldFiles near = world_files(config.world_file);
  auto pick = [](const std::string& configured, const std::string& fallback) {
    if (!configured.empty()) return configured;
    return fs::exists(fallback) ? fallback : std::string{};
  };
  const std::string seeds = pick(config.seeds_file, near.seeds);
  const std::string priors = pick(config.priors_file, near.priors);
  const std::string truth = pick(config.truth_file, near.truth);
  if (seeds.empty()) throw ConfigError("no seed file configured");
  SimulatedSetup s;
  s.web = SimulatedWeb::load(config.world_file);
  s.index = DirectoryIndex::from_web(s.web);
  s.seeds = load_seeds(seeds);
  if (!priors.empty()) s.priors = load_priors(priors);
  if (!truth.empty()) s.truth = WorldTruth::load(truth);
  return s;
}

RunResult run_simulated(const PipelineConfig& config, const SimulatedSetup& setup) {
  SimulatedFetcher fetcher(setup.web, config.per_domain_delay);
  PipelineInputs in;
  in.seeds = setup.seeds;
  in.priors = setup.priors;
  in.fetcher = &fetcher;
  in.resolver = &setup.index;
  in.truth = setup.truth ? &*setup.truth : nullptr;
  return run_pipeline(config, in);
}

RunResult run_live(const PipelineConfig& config) {
  if (config.seeds_file.empty()) throw ConfigError("no seed file configured");
  HttpFetcherOptions opts;
  opts.per_domain_delay = config.per_domain_delay;
  opts.timeout = config.fetch_timeout;
  HttpFetcher http(opts);
  std::optional<PageCache> pages;
  std::optional<CachingFetcher> caching;
  Fetcher* fetcher = &http;
  if (!config.cache_dir.empty()) {
    pages.emplace((fs::path(config.cache_dir) / "pages").string(),
                  std::chrono::duration_cast<std::chrono::seconds>(kPageCacheTtl));
    caching.emplace(http, *pages);
    fetcher = &*caching;
  }
  TemplateResolver resolver(config.directory_templates);
  PipelineInputs in;
  in.seeds = load_seeds(config.seeds_file);
  if (!config.priors_file.empty()) in.priors = load_priors(config.priors_file);
  in.fetcher = fetcher;
  in.resolver = &resolver;
  std::optional<WorldTruth> truth;
  if (!config.truth_file.empty()) {
    truth = WorldTruth::load(config.truth_file);
    in.truth = &*truth;
  }
  return run_pipeline(config, in);
}

ComparisonRow comparison_row(CrawlStrategy strategy, const RunResult& run) {
  ComparisonRow row;
  row.strategy = strategy;
  if (run.evaluation) row.metrics = *run.evaluation;
  row.pages = run.pages_used;
  row.entities = run.graph.entity_count();
  row.relations = run.graph.relation_count();
  row.planted_found = run.planted_found;
  return row;
}

std::vector<ComparisonRow> run_comparison(const std::vector<PipelineConfig>& configs,
                                          const SimulatedSetup& setup) {
  for (const auto& c : configs)
    if (c.budget != configs.front().budget)
      throw ConfigError("all strategies must share one page budget");
  std::vector<ComparisonRow> rows;
  for (const auto& c : configs) rows.push_back(comparison_row(c.strategy, run_simulated(c, setup)));
  return rows;
}

std::vector<ComparisonRow> run_comparison(const PipelineConfig& base, const SimulatedSetup& setup) {
  std::vector<PipelineConfig> configs;
  for (CrawlStrategy s : {CrawlStrategy::Bfs, CrawlStrategy::Focused, CrawlStrategy::WkSinglePass,
                          CrawlStrategy::Wkw}) {
    PipelineConfig c = base;
    c.strategy = s;
    configs.push_back(std::move(c));
  }
  return run_comparison(configs, setup);
}

}  // namespace wkw

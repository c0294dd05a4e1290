#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "wkw/coverage.hpp"
#include "wkw/error.hpp"
#include "wkw/kg.hpp"
#include "wkw/pipeline.hpp"
#include "wkw/simweb.hpp"

namespace wkw::cli {

using nlohmann::json;

namespace {

// Flags shared by run and compare. Unset flags leave the config untouched.
struct PipelineFlags {
  std::string config;
  std::optional<std::string> strategy;
  std::optional<std::size_t> budget;
  std::optional<int> iterations;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> world, seeds, priors, truth;
  std::optional<std::string> backend;
  std::optional<std::string> cache_dir;
  std::optional<long> delay_ms;
  std::optional<double> tau;
  bool no_gaps = false;
  bool no_distmult = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON config file");
    app->add_option("--strategy", strategy, "bfs | focused | wk_single_pass | wkw");
    app->add_option("--budget", budget, "total page budget");
    app->add_option("--iterations", iterations, "maximum iterations");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--world", world, "simulated web (world.json)");
    app->add_option("--seeds", seeds, "seed urls (jsonl)");
    app->add_option("--priors", priors, "sector/location priors (jsonl)");
    app->add_option("--truth", truth, "ground truth (jsonl)");
    app->add_option("--backend", backend, "simulated | live");
    app->add_option("--cache-dir", cache_dir, "page and extraction cache (env WKW_CACHE_DIR)");
    app->add_option("--delay-ms", delay_ms, "per-domain delay in milliseconds");
    app->add_option("--tau", tau, "coverage stopping threshold");
    app->add_flag("--no-gaps", no_gaps, "disable gap-driven reseeding");
    app->add_flag("--no-distmult", no_distmult, "disable link prediction");
  }

  PipelineConfig resolve() const {
    PipelineConfig c = config.empty() ? PipelineConfig{} : load_config(config);
    json o = json::object();
    if (strategy) o["strategy"] = *strategy;
    if (budget) o["budget"] = *budget;
    if (iterations) o["max_iterations"] = *iterations;
    if (seed) o["seed"] = *seed;
    if (tau) o["stopping"]["tau"] = *tau;
    if (world) o["inputs"]["world"] = *world;
    if (seeds) o["inputs"]["seeds"] = *seeds;
    if (priors) o["inputs"]["priors"] = *priors;
    if (truth) o["inputs"]["truth"] = *truth;
    if (backend) o["backend"]["kind"] = *backend;
    if (delay_ms) o["backend"]["per_domain_delay_ms"] = *delay_ms;
    if (cache_dir) {
      o["backend"]["cache_dir"] = *cache_dir;
    } else if (const char* env = std::getenv("WKW_CACHE_DIR"); env && *env) {
      o["backend"]["cache_dir"] = env;
    }
    if (no_gaps) o["gaps"]["enabled"] = false;
    if (no_distmult) o["distmult"]["enabled"] = false;
    return parse_config(o.dump(), c);
  }
};

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string pct(double v) { return fixed(100.0 * v, 1) + "%"; }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void print_iterations(const RunResult& run, std::ostream& out) {
  out << "iter  pages  entities  companies  relations  C_hat   gaps  decision\n";
  for (const auto& r : run.iterations) {
    char line[160];
    std::snprintf(line, sizeof line, "%4d  %5zu  %8zu  %9zu  %9zu  %5s  %5zu  %s\n", r.iteration,
                  r.cumulative_pages, r.cumulative_entities, r.cumulative_companies,
                  r.cumulative_relations, pct(r.coverage.c_hat).c_str(), r.gap_signals,
                  std::string(to_string(r.decision)).c_str());
    out << line;
  }
  if (run.evaluation) {
    const auto& m = *run.evaluation;
    out << "precision " << fixed(m.precision, 3) << "  recall " << fixed(m.recall, 3) << "  f1 "
        << fixed(m.f1, 3) << "  (" << m.true_positives << "/" << m.discovered << " of "
        << m.ground_truth << ")\n";
  }
}

json comparison_rows_json(const std::vector<ComparisonRow>& rows) {
  ReportBundle b;
  b.comparison = rows;
  return json::parse(bundle_to_json(b)).at("comparison");
}

int cmd_gen_world(const std::string& out_path, const WorldConfig& wc, std::ostream& out) {
  World w = generate_world(wc);
  save_world(w, out_path);
  const WorldFiles f = world_files(out_path);
  out << "wrote " << f.world << " (" << w.web.size() << " pages, " << w.truth.targets.size()
      << " target companies, " << w.truth.planted.size() << " planted)\n";
  return kOk;
}

int cmd_run(const PipelineFlags& flags, const std::string& out_dir, std::ostream& out) {
  PipelineConfig c = flags.resolve();
  RunResult run = c.backend == Backend::Live ? run_live(c) : run_simulated(c, load_setup(c));
  print_iterations(run, out);
  if (!out_dir.empty()) {
    write_run_directory(run, c, out_dir);
    out << "run directory: " << out_dir << "\n";
  }
  return kOk;
}

int cmd_compare(const PipelineFlags& flags, const std::string& out_dir, bool as_json, std::ostream& out) {
  PipelineConfig c = flags.resolve();
  if (c.backend != Backend::Simulated) throw ConfigError("compare runs on the simulated backend only");
  auto rows = run_comparison(c, load_setup(c));
  if (!out_dir.empty()) {
    ReportBundle b;
    b.comparison = rows;
    emit_reports(b, out_dir);
  }
  if (as_json) {
    out << comparison_rows_json(rows).dump(2) << "\n";
    return kOk;
  }
  out << "strategy         discovered  tp   precision  recall  f1     pages  planted\n";
  for (const auto& r : rows) {
    char line[160];
    std::snprintf(line, sizeof line, "%-15s  %10zu  %3zu  %9s  %6s  %5s  %5zu  %7zu\n",
                  std::string(to_string(r.strategy)).c_str(), r.metrics.discovered, r.metrics.true_positives,
                  fixed(r.metrics.precision, 3).c_str(), fixed(r.metrics.recall, 3).c_str(),
                  fixed(r.metrics.f1, 3).c_str(), r.pages, r.planted_found);
    out << line;
  }
  return kOk;
}

int cmd_estimate(const std::string& path, std::size_t replicates, double level, std::uint64_t seed,
                 bool as_json, std::ostream& out) {
  IncidenceMatrix m = load_incidence_csv(path);
  CoverageEstimate e = chao1(frequency_counts(m));
  std::optional<ConfidenceInterval> ci;
  if (replicates > 0 && m.source_count() >= 2) ci = bootstrap_ci(m, replicates, level, seed);
  if (as_json) {
    json j = {{"s_obs", e.s_obs}, {"f1", e.f1}, {"f2", e.f2}, {"s_hat", e.s_hat}, {"c_hat", e.c_hat}};
    if (ci) j["ci"] = {{"level", level}, {"low", ci->low}, {"high", ci->high}, {"replicates", ci->replicates_used}};
    out << j.dump(2) << "\n";
    return kOk;
  }
  out << "S_obs " << e.s_obs << "  f1 " << e.f1 << "  f2 " << e.f2 << "\n";
  out << "S_hat " << std::llround(e.s_hat) << "\n";
  out << "C_hat " << pct(e.c_hat) << "\n";
  if (ci)
    out << fixed(100 * level, 0) << "% CI [" << std::llround(ci->low) << ", " << std::llround(ci->high) << "]\n";
  else
    out << "CI n/a (fewer than two sources)\n";
  return kOk;
}

int cmd_fit_curve(const std::string& path, bool as_json, std::ostream& out) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  auto points = parse_points_csv(in);
  AccumulationFit mm = fit_accumulation(points);
  LinearFit lin = fit_linear(points);
  if (as_json) {
    out << json{{"michaelis_menten",
                 {{"s_max", mm.s_max}, {"k", mm.k}, {"rss", mm.rss}, {"near_upper_bound", mm.near_upper_bound}}},
                {"linear", {{"intercept", lin.intercept}, {"slope", lin.slope}, {"rss", lin.rss}}}}
               .dump(2)
        << "\n";
    return kOk;
  }
  out << "michaelis-menten  S_max " << fixed(mm.s_max, 2) << "  K " << fixed(mm.k, 3) << "  rss "
      << fixed(mm.rss, 3) << (mm.near_upper_bound ? "  (K at search ceiling, curve looks linear)" : "") << "\n";
  out << "linear            a " << fixed(lin.intercept, 3) << "  b " << fixed(lin.slope, 5) << "  rss "
      << fixed(lin.rss, 3) << "\n";
  return kOk;
}

int cmd_report(const std::string& bundle, const std::string& run_dir, const std::string& out_dir,
               std::ostream& out) {
  if (bundle.empty() == run_dir.empty()) throw ConfigError("report needs exactly one of --bundle or --run");
  const std::string path = bundle.empty() ? run_dir + "/reports/bundle.json" : bundle;
  emit_reports(bundle_from_json(slurp(path)), out_dir);
  out << "reports written to " << out_dir << "\n";
  return kOk;
}

int cmd_validate(const std::string& path, std::ostream& out) {
  KnowledgeGraph g = load_graph(path);
  auto problems = audit(g);
  for (const auto& p : problems) out << p << "\n";
  out << g.entity_count() << " entities, " << g.relation_count() << " relations, " << problems.size()
      << " violations\n";
  return problems.empty() ? kOk : kRuntimeError;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Iterative crawl, knowledge graph and coverage toolkit for supplier discovery", "wkw"};
  app.require_subcommand(1);

  std::string world_out = "world.json";
  WorldConfig wc;
  auto* gen = app.add_subcommand("gen-world", "generate a simulated supplier web");
  gen->add_option("--out", world_out, "world file; companions are written alongside");
  gen->add_option("--seed", wc.seed, "generator seed");
  gen->add_option("--companies", wc.n_companies, "target companies");
  gen->add_option("--offtarget", wc.n_offtarget, "off-topic firms");
  gen->add_option("--presence", wc.presence, "chance a target appears on any page");

  PipelineFlags run_flags, cmp_flags;
  std::string run_out, cmp_out;
  auto* run = app.add_subcommand("run", "run the crawl pipeline");
  run_flags.attach(run);
  run->add_option("--out", run_out, "run directory for reports, snapshots and logs");

  bool cmp_json = false;
  auto* cmp = app.add_subcommand("compare", "run all four strategies under one budget");
  cmp_flags.attach(cmp);
  cmp->add_option("--out", cmp_out, "report directory");
  cmp->add_flag("--json", cmp_json, "machine-readable output");

  std::string incidence;
  std::size_t replicates = 1000;
  double level = 0.95;
  std::uint64_t est_seed = 20240611;
  bool est_json = false;
  auto* est = app.add_subcommand("estimate", "Chao1 coverage from an incidence matrix");
  est->add_option("--incidence", incidence, "entity x source 0/1 CSV")->required();
  est->add_option("--replicates", replicates, "bootstrap replicates (0 disables)");
  est->add_option("--level", level, "confidence level");
  est->add_option("--seed", est_seed, "bootstrap seed");
  est->add_flag("--json", est_json, "machine-readable output");

  std::string points;
  bool fit_json = false;
  auto* fit = app.add_subcommand("fit-curve", "fit an accumulation curve to (pages, entities) points");
  fit->add_option("--points", points, "CSV of n,S rows")->required();
  fit->add_flag("--json", fit_json, "machine-readable output");

  std::string bundle, run_dir, report_out;
  auto* rep = app.add_subcommand("report", "emit CSV/JSON reports from a saved run");
  rep->add_option("--bundle", bundle, "report bundle JSON");
  rep->add_option("--run", run_dir, "run directory written by 'run --out'");
  rep->add_option("--out", report_out, "output directory")->required();

  std::string kg_file;
  auto* val = app.add_subcommand("validate-kg", "audit a knowledge-graph snapshot");
  val->add_option("snapshot", kg_file, "KG jsonl file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (gen->parsed()) return cmd_gen_world(world_out, wc, out);
    if (run->parsed()) return cmd_run(run_flags, run_out, out);
    if (cmp->parsed()) return cmd_compare(cmp_flags, cmp_out, cmp_json, out);
    if (est->parsed()) return cmd_estimate(incidence, replicates, level, est_seed, est_json, out);
    if (fit->parsed()) return cmd_fit_curve(points, fit_json, out);
    if (rep->parsed()) return cmd_report(bundle, run_dir, report_out, out);
    if (val->parsed()) return cmd_validate(kg_file, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIoError;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kConfigError;
}

}  // namespace wkw::cli

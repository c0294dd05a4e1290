#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "wkw/error.hpp"
#include "wkw/pipeline.hpp"

namespace wkw {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string{}; }

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

void write_text(const fs::path& p, const std::string& text) {
  auto out = open_out(p);
  out << text;
  if (!out) throw IoError("write failed for " + p.string());
}

json comparison_json(const ComparisonRow& r) {
  return {{"strategy", to_string(r.strategy)},
          {"discovered", r.metrics.discovered},
          {"true_positives", r.metrics.true_positives},
          {"ground_truth", r.metrics.ground_truth},
          {"precision", r.metrics.precision},
          {"recall", r.metrics.recall},
          {"f1", r.metrics.f1},
          {"pages", r.pages},
          {"entities", r.entities},
          {"relations", r.relations},
          {"planted_found", r.planted_found}};
}

json iteration_json(const IterationReport& r) {
  return {{"iteration", r.iteration},
          {"pages", r.pages},
          {"cumulative_pages", r.cumulative_pages},
          {"new_entities", r.new_entities},
          {"entities", r.cumulative_entities},
          {"companies", r.cumulative_companies},
          {"relations", r.cumulative_relations},
          {"raw_companies", r.raw_companies},
          {"observed", r.coverage.s_obs},
          {"s_hat", r.coverage.s_hat},
          {"c_hat", r.coverage.c_hat},
          {"f1", r.coverage.f1},
          {"f2", r.coverage.f2},
          {"ci_low", opt(r.coverage.ci_low)},
          {"ci_high", opt(r.coverage.ci_high)},
          {"true_positives", opt(r.true_positives)},
          {"c_true", opt(r.c_true)},
          {"error", opt(r.coverage_error)},
          {"gap_signals", r.gap_signals},
          {"gap_urls", r.gap_urls},
          {"elapsed_seconds", r.elapsed_seconds},
          {"decision", to_string(r.decision)}};
}

IterationReport iteration_from_json(const json& j) {
  IterationReport r;
  r.iteration = j.at("iteration").get<int>();
  r.pages = j.at("pages").get<std::size_t>();
  r.cumulative_pages = j.at("cumulative_pages").get<std::size_t>();
  r.new_entities = j.at("new_entities").get<std::size_t>();
  r.cumulative_entities = j.at("entities").get<std::size_t>();
  r.cumulative_companies = j.at("companies").get<std::size_t>();
  r.cumulative_relations = j.at("relations").get<std::size_t>();
  r.raw_companies = j.at("raw_companies").get<std::size_t>();
  r.coverage.s_obs = j.at("observed").get<std::size_t>();
  r.coverage.s_hat = j.at("s_hat").get<double>();
  r.coverage.c_hat = j.at("c_hat").get<double>();
  r.coverage.f1 = j.at("f1").get<std::size_t>();
  r.coverage.f2 = j.at("f2").get<std::size_t>();
  r.coverage.ci_low = opt_from<double>(j, "ci_low");
  r.coverage.ci_high = opt_from<double>(j, "ci_high");
  r.true_positives = opt_from<std::size_t>(j, "true_positives");
  r.c_true = opt_from<double>(j, "c_true");
  r.coverage_error = opt_from<double>(j, "error");
  r.gap_signals = j.at("gap_signals").get<std::size_t>();
  r.gap_urls = j.at("gap_urls").get<std::size_t>();
  r.elapsed_seconds = j.at("elapsed_seconds").get<double>();
  const std::string d = j.at("decision").get<std::string>();
  for (StopDecision s : {StopDecision::Continue, StopDecision::StopCoverage, StopDecision::StopMarginal})
    if (to_string(s) == d) r.decision = s;
  return r;
}

json retro_json(const RetroEvalRow& r) {
  return {{"from_iteration", r.from_iteration},
          {"to_iteration", r.to_iteration},
          {"n_entities", r.n_entities},
          {"final_loss", r.final_loss},
          {"n_predictions", r.n_predictions},
          {"link_confirmation_rate", r.link_confirmation_rate},
          {"neighborhood_growth_rate", r.neighborhood_growth_rate}};
}

json type_consistency_json(const TypeConsistencyReport& tc) {
  json rows = json::array();
  auto row = [&](std::string name, const TypeConsistencyRow& r) {
    rows.push_back({{"relation", name}, {"count", r.count}, {"consistent", r.consistent},
                    {"fraction", opt(r.fraction())}});
  };
  for (RelationType t : kRelationTypes) row(std::string(to_string(t)), tc.row(t));
  row("total", tc.total());
  return rows;
}

}  // namespace

ReportBundle bundle_from_run(const RunResult& run) {
  ReportBundle b;
  b.iterations = run.iterations;
  b.type_consistency = type_consistency_report(run.raw_graph);
  b.retro = run.retro;
  for (const auto& it : run.iterations)
    b.discovery_curve.emplace_back(static_cast<double>(it.cumulative_pages),
                                   static_cast<double>(it.cumulative_entities));
  if (b.discovery_curve.size() >= 3) {
    try {
      b.accumulation = fit_accumulation(b.discovery_curve);
      b.linear = fit_linear(b.discovery_curve);
    } catch (const Error&) {
      // flat or too-short curves have no meaningful fit
      b.accumulation.reset();
      b.linear.reset();
    }
  }
  return b;
}

void emit_reports(const ReportBundle& b, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  const fs::path d(dir);

  {
    auto out = open_out(d / "comparison.csv");
    out << "strategy,discovered,true_positives,ground_truth,precision,recall,f1,pages,entities,relations,planted_found\n";
    for (const auto& r : b.comparison)
      out << to_string(r.strategy) << ',' << r.metrics.discovered << ',' << r.metrics.true_positives << ','
          << r.metrics.ground_truth << ',' << num(r.metrics.precision) << ',' << num(r.metrics.recall) << ','
          << num(r.metrics.f1) << ',' << r.pages << ',' << r.entities << ',' << r.relations << ','
          << r.planted_found << '\n';
    json j = json::array();
    for (const auto& r : b.comparison) j.push_back(comparison_json(r));
    write_text(d / "comparison.json", j.dump(2));
  }
  {
    auto out = open_out(d / "coverage.csv");
    out << kCoverageColumns << '\n';
    for (const auto& r : b.iterations)
      out << r.iteration << ',' << r.coverage.s_obs << ',' << num(r.coverage.s_hat) << ','
          << num(r.coverage.c_hat) << ',' << num(r.c_true) << ',' << num(r.coverage_error) << ','
          << r.coverage.f1 << ',' << r.coverage.f2 << '\n';
    json j = json::array();
    for (const auto& r : b.iterations)
      j.push_back({{"iter", r.iteration}, {"observed", r.coverage.s_obs}, {"S_hat", r.coverage.s_hat},
                   {"C_hat", r.coverage.c_hat}, {"C_true", opt(r.c_true)}, {"error", opt(r.coverage_error)},
                   {"f1", r.coverage.f1}, {"f2", r.coverage.f2}, {"ci_low", opt(r.coverage.ci_low)},
                   {"ci_high", opt(r.coverage.ci_high)}});
    write_text(d / "coverage.json", j.dump(2));
  }
  {
    auto out = open_out(d / "iterations.csv");
    out << "iter,pages,cumulative_pages,new_entities,entities,companies,relations,raw_companies,"
           "gap_signals,gap_urls,ci_low,ci_high,decision,elapsed_s\n";
    for (const auto& r : b.iterations)
      out << r.iteration << ',' << r.pages << ',' << r.cumulative_pages << ',' << r.new_entities << ','
          << r.cumulative_entities << ',' << r.cumulative_companies << ',' << r.cumulative_relations << ','
          << r.raw_companies << ',' << r.gap_signals << ',' << r.gap_urls << ',' << num(r.coverage.ci_low)
          << ',' << num(r.coverage.ci_high) << ',' << to_string(r.decision) << ','
          << num(r.elapsed_seconds) << '\n';
    json j = json::array();
    for (const auto& r : b.iterations) j.push_back(iteration_json(r));
    write_text(d / "iterations.json", j.dump(2));
  }
  {
    auto out = open_out(d / "type_consistency.csv");
    out << "relation,count,consistent,fraction\n";
    json rows = type_consistency_json(b.type_consistency);
    for (const auto& r : rows) {
      out << r["relation"].get<std::string>() << ',' << r["count"].get<std::size_t>() << ','
          << r["consistent"].get<std::size_t>() << ','
          << (r["fraction"].is_null() ? std::string{} : num(r["fraction"].get<double>())) << '\n';
    }
    write_text(d / "type_consistency.json", rows.dump(2));
  }
  {
    auto out = open_out(d / "retro_eval.csv");
    out << "from_iteration,to_iteration,n_entities,final_loss,n_predictions,link_confirmation_rate,"
           "neighborhood_growth_rate\n";
    for (const auto& r : b.retro)
      out << r.from_iteration << ',' << r.to_iteration << ',' << r.n_entities << ',' << num(r.final_loss)
          << ',' << r.n_predictions << ',' << num(r.link_confirmation_rate) << ','
          << num(r.neighborhood_growth_rate) << '\n';
    json j = json::array();
    for (const auto& r : b.retro) j.push_back(retro_json(r));
    write_text(d / "retro_eval.json", j.dump(2));
  }
  {
    auto out = open_out(d / "discovery_curve.csv");
    out << "pages,entities\n";
    for (const auto& [n, s] : b.discovery_curve) out << num(n) << ',' << num(s) << '\n';
    json j = json::array();
    for (const auto& [n, s] : b.discovery_curve) j.push_back({{"pages", n}, {"entities", s}});
    write_text(d / "discovery_curve.json", j.dump(2));
  }
  {
    auto out = open_out(d / "accumulation.csv");
    out << "model,s_max,k,intercept,slope,rss,near_upper_bound\n";
    json j = json::array();
    if (b.accumulation) {
      const auto& a = *b.accumulation;
      out << "michaelis_menten," << num(a.s_max) << ',' << num(a.k) << ",,," << num(a.rss) << ','
          << (a.near_upper_bound ? "true" : "false") << '\n';
      j.push_back({{"model", "michaelis_menten"}, {"s_max", a.s_max}, {"k", a.k}, {"rss", a.rss},
                   {"near_upper_bound", a.near_upper_bound}});
    }
    if (b.linear) {
      const auto& l = *b.linear;
      out << "linear,,," << num(l.intercept) << ',' << num(l.slope) << ',' << num(l.rss) << ",\n";
      j.push_back({{"model", "linear"}, {"intercept", l.intercept}, {"slope", l.slope}, {"rss", l.rss}});
    }
    write_text(d / "accumulation.json", j.dump(2));
  }
}

std::string bundle_to_json(const ReportBundle& b) {
  json j;
  j["comparison"] = json::array();
  for (const auto& r : b.comparison) j["comparison"].push_back(comparison_json(r));
  j["iterations"] = json::array();
  for (const auto& r : b.iterations) j["iterations"].push_back(iteration_json(r));
  j["type_consistency"] = type_consistency_json(b.type_consistency);
  j["retro"] = json::array();
  for (const auto& r : b.retro) j["retro"].push_back(retro_json(r));
  j["discovery_curve"] = json::array();
  for (const auto& [n, s] : b.discovery_curve) j["discovery_curve"].push_back({n, s});
  j["accumulation"] = b.accumulation
                          ? json{{"s_max", b.accumulation->s_max}, {"k", b.accumulation->k},
                                 {"rss", b.accumulation->rss},
                                 {"near_upper_bound", b.accumulation->near_upper_bound}}
                          : json(nullptr);
  j["linear"] = b.linear ? json{{"intercept", b.linear->intercept}, {"slope", b.linear->slope},
                                {"rss", b.linear->rss}}
                         : json(nullptr);
  return j.dump(2);
}

ReportBundle bundle_from_json(std::string_view text) {
  ReportBundle b;
  try {
    json j = json::parse(text);
    for (const auto& r : j.at("comparison")) {
      ComparisonRow c;
      auto s = parse_strategy(r.at("strategy").get<std::string>());
      if (!s) throw ParseError("unknown strategy in report bundle");
      c.strategy = *s;
      c.metrics.discovered = r.at("discovered").get<std::size_t>();
      c.metrics.true_positives = r.at("true_positives").get<std::size_t>();
      c.metrics.ground_truth = r.at("ground_truth").get<std::size_t>();
      c.metrics.precision = r.at("precision").get<double>();
      c.metrics.recall = r.at("recall").get<double>();
      c.metrics.f1 = r.at("f1").get<double>();
      c.pages = r.at("pages").get<std::size_t>();
      c.entities = r.at("entities").get<std::size_t>();
      c.relations = r.at("relations").get<std::size_t>();
      c.planted_found = r.at("planted_found").get<std::size_t>();
      b.comparison.push_back(c);
    }
    for (const auto& r : j.at("iterations")) b.iterations.push_back(iteration_from_json(r));
    for (const auto& r : j.at("type_consistency")) {
      const std::string name = r.at("relation").get<std::string>();
      if (name == "total") continue;
      auto t = parse_relation_type(name);
      if (!t) throw ParseError("unknown relation '" + name + "' in report bundle");
      auto& row = b.type_consistency.by_type[static_cast<std::size_t>(*t)];
      row.count = r.at("count").get<std::size_t>();
      row.consistent = r.at("consistent").get<std::size_t>();
    }
    for (const auto& r : j.at("retro")) {
      RetroEvalRow x;
      x.from_iteration = r.at("from_iteration").get<int>();
      x.to_iteration = r.at("to_iteration").get<int>();
      x.n_entities = r.at("n_entities").get<std::size_t>();
      x.final_loss = r.at("final_loss").get<double>();
      x.n_predictions = r.at("n_predictions").get<std::size_t>();
      x.link_confirmation_rate = r.at("link_confirmation_rate").get<double>();
      x.neighborhood_growth_rate = r.at("neighborhood_growth_rate").get<double>();
      b.retro.push_back(x);
    }
    for (const auto& p : j.at("discovery_curve"))
      b.discovery_curve.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    if (!j.at("accumulation").is_null()) {
      const auto& a = j.at("accumulation");
      b.accumulation = AccumulationFit{a.at("s_max").get<double>(), a.at("k").get<double>(),
                                       a.at("rss").get<double>(), a.at("near_upper_bound").get<bool>()};
    }
    if (!j.at("linear").is_null()) {
      const auto& l = j.at("linear");
      b.linear = LinearFit{l.at("intercept").get<double>(), l.at("slope").get<double>(), l.at("rss").get<double>()};
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed report bundle: ") + e.what());
  }
  return b;
}

void write_run_directory(const RunResult& run, const PipelineConfig& config, const std::string& dir) {
  const fs::path root(dir);
  std::error_code ec;
  for (const char* sub : {"reports", "kg_snapshots", "logs"}) {
    fs::create_directories(root / sub, ec);
    if (ec) throw IoError("cannot create " + (root / sub).string() + ": " + ec.message());
  }

  ReportBundle bundle = bundle_from_run(run);
  emit_reports(bundle, (root / "reports").string());
  write_text(root / "reports" / "bundle.json", bundle_to_json(bundle));

  for (std::size_t i = 0; i < run.snapshots.size(); ++i)
    save_graph(run.snapshots[i], (root / "kg_snapshots" / ("G_" + std::to_string(i + 1) + ".jsonl")).string());
  save_graph(run.raw_graph, (root / "kg_snapshots" / "raw.jsonl").string());

  {
    auto out = open_out(root / "logs" / "fetch_log.jsonl");
    for (const auto& e : run.fetch_log)
      out << json{{"url", e.url}, {"status", to_string(e.status)}, {"http_code", e.http_code},
                  {"iteration", e.iteration}}.dump()
          << '\n';
  }
  write_text(root / "logs" / "merge_log.jsonl", merge_log_to_jsonl(run.merge_log));
  {
    auto out = open_out(root / "logs" / "signals.jsonl");
    for (const auto& s : run.signal_log)
      out << json{{"kind", to_string(s.kind)}, {"focus", s.focus_names}, {"severity", s.severity},
                  {"queries", s.queries}, {"iteration", s.created_iteration}}.dump()
          << '\n';
  }
  {
    auto out = open_out(root / "logs" / "predictions.jsonl");
    for (const auto& p : run.predictions)
      for (const auto& l : p.links)
        out << json{{"iteration", p.iteration}, {"rank", l.rank}, {"head", l.head_name},
                    {"tail", l.tail_name}, {"score", l.score}}.dump()
            << '\n';
  }

  json summary;
  summary["config"] = json::parse(config_to_json(config));
  summary["pages_used"] = run.pages_used;
  summary["iterations"] = run.iterations.size();
  summary["stop"] = to_string(run.stop);
  summary["entities"] = run.graph.entity_count();
  summary["relations"] = run.graph.relation_count();
  summary["extractor_calls"] = run.extractor_calls;
  summary["gap_urls_queued"] = run.gap_urls_queued.size();
  summary["planted_found"] = run.planted_found;
  if (run.evaluation) {
    const auto& m = *run.evaluation;
    summary["evaluation"] = {{"discovered", m.discovered}, {"true_positives", m.true_positives},
                             {"ground_truth", m.ground_truth}, {"precision", m.precision},
                             {"recall", m.recall}, {"f1", m.f1}};
  }
  write_text(root / "run.json", summary.dump(2));
}

}  // namespace wkw

#include "wkw/gap_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "wkw/error.hpp"
#include "wkw/text.hpp"
#include "wkw/url.hpp"

namespace wkw {

std::string_view to_string(GapKind k) {
  switch (k) {
    case GapKind::DegreeAnomaly: return "degree_anomaly";
    case GapKind::MissingBridge: return "missing_bridge";
    case GapKind::GeographicGap: return "geographic_gap";
    case GapKind::PredictedLink: return "predicted_link";
  }
  return "unknown";
}

std::string GapSignal::key() const {
  std::string k(to_string(kind));
  for (const auto& n : focus_names) k += "|" + normalize_name(n);
  return k;
}

Priors parse_priors(std::istream& in) {
  Priors priors;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      std::string kind = to_lower(j.at("kind").get<std::string>());
      std::string name = normalize_name(j.at("name").get<std::string>());
      int expected = j.at("expected").get<int>();
      if (expected < 0) throw ParseError("prior must be non-negative", line_no);
      if (name.empty()) throw ParseError("prior name is empty", line_no);
      if (kind == "sector") priors.sectors[name] = expected;
      else if (kind == "location") priors.locations[name] = expected;
      else throw ParseError("unknown prior kind '" + kind + "'", line_no);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad prior record: ") + e.what(), line_no);
    }
  }
  return priors;
}

Priors load_priors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read priors file " + path);
  return parse_priors(in);
}

std::string display_name(const Entity& e) {
  return e.aliases.empty() ? e.canonical_name : *e.aliases.begin();
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// company -> sectors it belongs to
std::map<EntityId, std::set<EntityId>> company_sectors(const KnowledgeGraph& g) {
  std::map<EntityId, std::set<EntityId>> out;
  for (const Relation& r : g.relations())
    if (r.type == RelationType::BelongsToSector) out[r.source].insert(r.target);
  return out;
}

std::map<EntityId, std::set<EntityId>> supplies_adjacency(const KnowledgeGraph& g) {
  std::map<EntityId, std::set<EntityId>> out;
  for (const Relation& r : g.relations())
    if (r.type == RelationType::SuppliesTo && r.source != r.target) out[r.source].insert(r.target);
  return out;
}

std::string join_names(const GapSignal& s) {
  std::string out;
  for (const auto& n : s.focus_names) out += normalize_name(n) + "\x1f";
  return out;
}

}  // namespace

std::map<EntityId, std::size_t> sector_company_degrees(const KnowledgeGraph& graph) {
  std::map<EntityId, std::set<EntityId>> members;
  for (const auto& [id, e] : graph.entities())
    if (e.type == EntityType::Sector) members[id];
  for (const Relation& r : graph.relations())
    if (r.type == RelationType::BelongsToSector) members[r.target].insert(r.source);
  std::map<EntityId, std::size_t> out;
  for (const auto& [id, m] : members) out[id] = m.size();
  return out;
}

std::vector<GapSignal> detect_degree_anomalies(const KnowledgeGraph& graph,
                                               const std::map<std::string, int>& sector_priors,
                                               int iteration) {
  auto deg = sector_company_degrees(graph);
  std::vector<GapSignal> out;
  if (deg.empty()) return out;

  std::vector<double> values;
  for (const auto& [id, d] : deg) values.push_back(static_cast<double>(d));
  const double med = median(values);
  std::vector<double> dev;
  for (double v : values) dev.push_back(std::abs(v - med));
  const double mad = median(dev);
  const bool z_rule = deg.size() >= 3 && mad > 0.0;

  for (const auto& [id, d] : deg) {
    const Entity& sector = graph.entity(id);
    const double observed = static_cast<double>(d);
    auto prior_it = sector_priors.find(sector.canonical_name);
    const double prior = prior_it == sector_priors.end() ? 0.0 : prior_it->second;
    const bool below_prior = prior_it != sector_priors.end() && observed < prior;
    const bool below_z = z_rule && (observed - med) / (kMadScale * mad) < kAnomalyZThreshold;
    if (!below_prior && !below_z) continue;
    const double reference = std::max(prior, med);
    const double deficit = reference - observed;
    if (deficit <= 0.0) continue;
    GapSignal s;
    s.kind = GapKind::DegreeAnomaly;
    s.focus = {id};
    s.focus_names = {display_name(sector)};
    s.severity = std::min(1.0, deficit / reference);
    s.created_iteration = iteration;
    s.queries = expand_queries(s, graph);
    out.push_back(std::move(s));
  }
  sort_signals(out);
  return out;
}

std::vector<GapSignal> detect_missing_bridges(const KnowledgeGraph& graph, int iteration) {
  auto sectors = company_sectors(graph);
  auto adj = supplies_adjacency(graph);

  // Sector pairs joined somewhere by a two-hop supplies_to path a -> x -> b.
  std::set<std::pair<EntityId, EntityId>> bridged;
  for (const auto& [a, mids] : adj) {
    auto sa = sectors.find(a);
    if (sa == sectors.end()) continue;
    for (EntityId x : mids) {
      auto next = adj.find(x);
      if (next == adj.end()) continue;
      for (EntityId b : next->second) {
        if (b == a) continue;
        auto sb = sectors.find(b);
        if (sb == sectors.end()) continue;
        for (EntityId s1 : sa->second)
          for (EntityId s2 : sb->second) bridged.insert({s1, s2});
      }
    }
  }
  std::vector<GapSignal> out;
  if (bridged.empty()) return out;

  auto reaches = [&](EntityId from, EntityId to) {
    auto it = adj.find(from);
    if (it == adj.end()) return false;
    if (it->second.count(to)) return true;
    for (EntityId x : it->second) {
      auto nx = adj.find(x);
      if (nx != adj.end() && nx->second.count(to)) return true;
    }
    return false;
  };

  for (const auto& [c1, s1set] : sectors) {
    for (const auto& [c3, s3set] : sectors) {
      if (c1 == c3) continue;
      bool expected = false;
      for (EntityId s1 : s1set) {
        for (EntityId s3 : s3set)
          if (bridged.count({s1, s3})) {
            expected = true;
            break;
          }
        if (expected) break;
      }
      if (!expected || reaches(c1, c3)) continue;
      GapSignal s;
      s.kind = GapKind::MissingBridge;
      s.focus = {c1, c3};
      s.focus_names = {display_name(graph.entity(c1)), display_name(graph.entity(c3))};
      s.severity = kBridgeSeverity;
      s.created_iteration = iteration;
      s.queries = expand_queries(s, graph);
      out.push_back(std::move(s));
    }
  }
  sort_signals(out);
  return out;
}

std::vector<GapSignal> detect_geographic_gaps(const KnowledgeGraph& graph,
                                              const std::map<std::string, int>& location_priors,
                                              int iteration) {
  std::vector<GapSignal> out;
  if (location_priors.empty()) return out;

  auto sectors = company_sectors(graph);
  std::map<EntityId, std::set<EntityId>> residents;
  for (const Relation& r : graph.relations())
    if (r.type == RelationType::LocatedIn) residents[r.target].insert(r.source);

  // Most frequent sector among a set of companies; ties go to the smaller name.
  auto top_sector = [&](const std::set<EntityId>* companies) -> std::string {
    std::map<std::string, std::size_t> tally;
    for (const auto& [c, ss] : sectors) {
      if (companies && !companies->count(c)) continue;
      for (EntityId s : ss) ++tally[display_name(graph.entity(s))];
    }
    std::string best;
    std::size_t best_n = 0;
    for (const auto& [name, n] : tally)
      if (n > best_n) best = name, best_n = n;
    return best;
  };
  std::string global_keyword = top_sector(nullptr);
  if (global_keyword.empty()) global_keyword = "industrial";

  for (const auto& [name, expected] : location_priors) {
    if (expected <= 0) continue;
    const Entity* loc = graph.find_normalized(name, EntityType::Location);
    std::size_t observed = 0;
    std::string keyword = global_keyword;
    if (loc) {
      auto it = residents.find(loc->id);
      if (it != residents.end()) {
        observed = it->second.size();
        std::string local = top_sector(&it->second);
        if (!local.empty()) keyword = local;
      }
    }
    if (observed >= static_cast<std::size_t>(expected)) continue;
    GapSignal s;
    s.kind = GapKind::GeographicGap;
    if (loc) s.focus = {loc->id};
    s.focus_names = {loc ? display_name(*loc) : name, keyword};
    s.severity = static_cast<double>(expected - static_cast<int>(observed)) / expected;
    s.created_iteration = iteration;
    s.queries = expand_queries(s, graph);
    out.push_back(std::move(s));
  }
  sort_signals(out);
  return out;
}

GapSignal predicted_link_signal(EntityId head, const std::string& head_name, EntityId tail,
                                const std::string& tail_name, double probability, int iteration) {
  GapSignal s;
  s.kind = GapKind::PredictedLink;
  s.focus = {head, tail};
  s.focus_names = {head_name, tail_name};
  s.severity = std::clamp(probability, 1e-6, 1.0);
  s.created_iteration = iteration;
  s.queries = {head_name + " supplier " + tail_name};
  return s;
}

std::vector<std::string> expand_queries(const GapSignal& signal, const KnowledgeGraph&) {
  std::vector<std::string> q;
  const auto& n = signal.focus_names;
  auto name = [&](std::size_t i) { return i < n.size() ? n[i] : std::string{}; };
  switch (signal.kind) {
    case GapKind::DegreeAnomaly:
      q = {name(0) + " suppliers", name(0) + " manufacturers directory"};
      break;
    case GapKind::MissingBridge:
      q = {"suppliers to " + name(1), name(0) + " customers"};
      break;
    case GapKind::GeographicGap:
      q = {name(1) + " companies in " + name(0)};
      break;
    case GapKind::PredictedLink:
      q = {name(0) + " supplier " + name(1)};
      break;
  }
  std::vector<std::string> out;
  for (auto& s : q)
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(std::move(s));
  return out;
}

void sort_signals(std::vector<GapSignal>& signals) {
  std::stable_sort(signals.begin(), signals.end(), [](const GapSignal& a, const GapSignal& b) {
    if (a.kind != b.kind) return a.kind < b.kind;
    return join_names(a) < join_names(b);
  });
}

std::vector<GapSignal> detect_gaps(const KnowledgeGraph& graph, const Priors& priors,
                                   int iteration) {
  std::vector<GapSignal> all = detect_degree_anomalies(graph, priors.sectors, iteration);
  auto bridges = detect_missing_bridges(graph, iteration);
  auto geo = detect_geographic_gaps(graph, priors.locations, iteration);
  all.insert(all.end(), std::make_move_iterator(bridges.begin()),
             std::make_move_iterator(bridges.end()));
  all.insert(all.end(), std::make_move_iterator(geo.begin()), std::make_move_iterator(geo.end()));
  sort_signals(all);
  return all;
}

namespace {

const std::set<std::string>& stopwords() {
  static const std::set<std::string> kWords = {"a", "an", "and", "the", "of", "in", "to", "for",
                                              "on", "at", "by", "with", "is"};
  return kWords;
}

}  // namespace

void DirectoryIndex::add_document(const std::string& url, std::string_view text) {
  std::map<std::string, std::size_t> tf;
  for (auto& t : tokenize(text))
    if (!stopwords().count(t)) ++tf[std::move(t)];
  for (auto& [term, n] : tf) postings_[term][url] += n;
  ++doc_count_;
}

DirectoryIndex DirectoryIndex::from_web(const SimulatedWeb& web) {
  DirectoryIndex index;
  for (const auto& [url, page] : web.pages()) {
    if (url.size() >= 11 && url.compare(url.size() - 11, 11, "/robots.txt") == 0) continue;
    index.add_document(url, page.text);
  }
  return index;
}

std::vector<std::pair<std::string, double>> DirectoryIndex::search(const std::string& query,
                                                                   std::size_t k) const {
  std::set<std::string> terms;
  for (auto& t : tokenize(query))
    if (!stopwords().count(t)) terms.insert(std::move(t));
  std::map<std::string, double> scores;
  for (const auto& term : terms) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const double idf = std::log(1.0 + static_cast<double>(doc_count_) /
                                          static_cast<double>(it->second.size()));
    for (const auto& [url, tf] : it->second)
      scores[url] += idf * (1.0 + std::log(static_cast<double>(tf)));
  }
  std::vector<std::pair<std::string, double>> ranked(scores.begin(), scores.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

std::vector<std::string> DirectoryIndex::lookup(const std::string& query, std::size_t k) const {
  std::vector<std::string> out;
  for (auto& [url, score] : search(query, k)) out.push_back(url);
  return out;
}

std::vector<std::string> TemplateResolver::lookup(const std::string& query, std::size_t k) const {
  std::vector<std::string> out;
  const std::string encoded = url_encode(query);
  for (const auto& t : templates_) {
    if (out.size() >= k) break;
    std::string url = t;
    auto at = url.find("{query}");
    if (at != std::string::npos) url.replace(at, 7, encoded);
    out.push_back(std::move(url));
  }
  return out;
}

std::vector<std::string> resolve_queries(const std::vector<std::string>& queries,
                                         const QueryResolver& resolver,
                                         const std::set<std::string>& fetched, std::size_t k) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& q : queries) {
    // Ask for extra candidates so that fetched pages do not starve the query.
    std::size_t taken = 0;
    for (const auto& raw : resolver.lookup(q, k + fetched.size())) {
      if (taken == k) break;
      auto url = normalize_url(raw);
      if (!url || fetched.count(*url)) continue;
      ++taken;
      if (seen.insert(*url).second) out.push_back(*url);
    }
  }
  return out;
}

std::vector<GapSignal> SignalLedger::update(const std::vector<GapSignal>& detected, int iteration) {
  for (const GapSignal& s : detected) {
    std::string key = s.key();
    if (expired_.count(key)) continue;
    auto it = active_.find(key);
    if (it == active_.end()) {
      Entry e{s, iteration, {}};
      e.signal.created_iteration = iteration;
      active_.emplace(std::move(key), std::move(e));
    } else {
      // Keep the original creation time; refresh severity and queries.
      it->second.signal.severity = s.severity;
      it->second.signal.queries = s.queries;
      it->second.signal.focus = s.focus;
    }
  }
  std::vector<GapSignal> out;
  for (const auto& [key, e] : active_) out.push_back(e.signal);
  sort_signals(out);
  return out;
}

void SignalLedger::record_urls(const GapSignal& signal, const std::vector<std::string>& urls) {
  std::string key = signal.key();
  auto it = active_.find(key);
  if (it == active_.end()) return;
  for (const auto& u : urls) {
    it->second.urls.insert(u);
    url_signals_[u].insert(key);
  }
}

void SignalLedger::credit(const std::string& url, int iteration) {
  auto it = url_signals_.find(url);
  if (it == url_signals_.end()) return;
  for (const auto& key : it->second) {
    auto a = active_.find(key);
    if (a != active_.end()) a->second.last_productive = std::max(a->second.last_productive, iteration);
  }
}

void SignalLedger::expire(int iteration) {
  for (auto it = active_.begin(); it != active_.end();) {
    if (iteration - it->second.last_productive >= lifetime_) {
      expired_.insert(it->first);
      it = active_.erase(it);
    } else {
      ++it;
    }
  }
}

std::map<std::string, double> SignalLedger::active_url_severity() const {
  std::map<std::string, double> out;
  for (const auto& [key, e] : active_)
    for (const auto& u : e.urls) {
      double& s = out[u];
      s = std::max(s, e.signal.severity);
    }
  return out;
}

std::size_t SignalLedger::active_count() const { return active_.size(); }

}  // namespace wkw

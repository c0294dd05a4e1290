#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "wkw/error.hpp"
#include "wkw/gap_analysis.hpp"

using namespace wkw;

namespace {

EntityId company(KnowledgeGraph& g, const std::string& name) {
  return g.upsert_entity(name, EntityType::Company, "p", 1);
}

void link(KnowledgeGraph& g, EntityId a, RelationType t, EntityId b) {
  g.add_relation_unfiltered({a, b, t, 0.9, "p"});
}

// Sector degrees 1, 9, 9, 10, 11, 12: median 9.5 and MAD 1.0.
KnowledgeGraph skewed_sectors() {
  KnowledgeGraph g;
  const std::vector<std::pair<std::string, int>> sizes = {
      {"Optics", 1}, {"Robotics", 9}, {"Sensors", 9}, {"Valves", 10}, {"Pumps", 11}, {"Motors", 12}};
  for (const auto& [name, n] : sizes) {
    EntityId s = g.upsert_entity(name, EntityType::Sector, "p", 1);
    for (int i = 0; i < n; ++i) link(g, company(g, name + " maker " + std::to_string(i)), RelationType::BelongsToSector, s);
  }
  return g;
}

}  // namespace

TEST(DegreeAnomaly, RobustZScoreHandExample) {
  KnowledgeGraph g = skewed_sectors();
  auto signals = detect_degree_anomalies(g, {}, 3);
  ASSERT_EQ(signals.size(), 1u);
  EXPECT_EQ(signals[0].focus_names[0], "Optics");
  // z = (1 - 9.5) / (1.4826 * 1.0) = -5.73
  EXPECT_NEAR(signals[0].severity, 8.5 / 9.5, 1e-9);
  EXPECT_EQ(signals[0].created_iteration, 3);
  EXPECT_EQ(signals[0].queries, (std::vector<std::string>{"Optics suppliers", "Optics manufacturers directory"}));
}

TEST(DegreeAnomaly, PriorFlagsSectorAboveMedian) {
  KnowledgeGraph g = skewed_sectors();
  auto signals = detect_degree_anomalies(g, {{"motors", 20}}, 1);
  ASSERT_EQ(signals.size(), 2u);
  EXPECT_EQ(signals[0].focus_names[0], "Motors");
  EXPECT_NEAR(signals[0].severity, 8.0 / 20.0, 1e-12);
}

TEST(DegreeAnomaly, SmallGraphsOnlyUsePriors) {
  KnowledgeGraph g;
  EntityId a = g.upsert_entity("Optics", EntityType::Sector, "p", 1);
  g.upsert_entity("Robotics", EntityType::Sector, "p", 1);
  link(g, company(g, "Lens Co"), RelationType::BelongsToSector, a);
  EXPECT_TRUE(detect_degree_anomalies(g, {}).empty());
  auto s = detect_degree_anomalies(g, {{"robotics", 4}});
  ASSERT_EQ(s.size(), 1u);
  EXPECT_DOUBLE_EQ(s[0].severity, 1.0);
}

TEST(MissingBridge, SimpleChain) {
  KnowledgeGraph g;
  EntityId up = g.upsert_entity("Raw", EntityType::Sector, "p", 1);
  EntityId down = g.upsert_entity("Assembly", EntityType::Sector, "p", 1);
  EntityId a = company(g, "Alpha"), x = company(g, "Mid"), b = company(g, "Beta"), c = company(g, "Gamma");
  link(g, a, RelationType::BelongsToSector, up);
  link(g, c, RelationType::BelongsToSector, up);
  link(g, b, RelationType::BelongsToSector, down);
  link(g, a, RelationType::SuppliesTo, x);
  link(g, x, RelationType::SuppliesTo, b);
  auto signals = detect_missing_bridges(g, 2);
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& s : signals) {
    EXPECT_DOUBLE_EQ(s.severity, kBridgeSeverity);
    pairs.insert({s.focus_names[0], s.focus_names[1]});
  }
  EXPECT_EQ(pairs, (std::set<std::pair<std::string, std::string>>{{"Gamma", "Beta"}}));
  EXPECT_EQ(signals[0].queries, (std::vector<std::string>{"suppliers to Beta", "Gamma customers"}));
}

TEST(MissingBridge, MatchesBruteForceOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    KnowledgeGraph g;
    const int n = 9, k = 3;
    std::vector<EntityId> sec, co;
    for (int s = 0; s < k; ++s) sec.push_back(g.upsert_entity("sector " + std::to_string(s), EntityType::Sector, "p", 1));
    for (int i = 0; i < n; ++i) co.push_back(company(g, "co " + std::to_string(i)));
    std::vector<std::set<int>> member(n);
    std::bernoulli_distribution in_sector(0.4), edge(0.15);
    for (int i = 0; i < n; ++i)
      for (int s = 0; s < k; ++s)
        if (in_sector(rng)) {
          member[i].insert(s);
          link(g, co[i], RelationType::BelongsToSector, sec[s]);
        }
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && edge(rng)) {
          adj[i][j] = true;
          link(g, co[i], RelationType::SuppliesTo, co[j]);
        }

    std::set<std::pair<int, int>> bridged;
    for (int a = 0; a < n; ++a)
      for (int x = 0; x < n; ++x)
        for (int b = 0; b < n; ++b)
          if (a != b && adj[a][x] && adj[x][b])
            for (int s1 : member[a])
              for (int s2 : member[b]) bridged.insert({s1, s2});
    std::set<std::pair<std::string, std::string>> expected;
    for (int c1 = 0; c1 < n; ++c1)
      for (int c3 = 0; c3 < n; ++c3) {
        if (c1 == c3) continue;
        bool want = false;
        for (int s1 : member[c1])
          for (int s3 : member[c3]) want = want || bridged.count({s1, s3});
        bool reach = adj[c1][c3];
        for (int x = 0; x < n; ++x) reach = reach || (adj[c1][x] && adj[x][c3]);
        if (want && !reach) expected.insert({"co " + std::to_string(c1), "co " + std::to_string(c3)});
      }
    std::set<std::pair<std::string, std::string>> got;
    for (const auto& s : detect_missing_bridges(g)) got.insert({s.focus_names[0], s.focus_names[1]});
    EXPECT_EQ(got, expected) << "trial " << trial;
  }
}

TEST(GeographicGap, KeywordAndSeverity) {
  KnowledgeGraph g;
  EntityId austin = g.upsert_entity("Austin", EntityType::Location, "p", 1);
  EntityId robotics = g.upsert_entity("Robotics", EntityType::Sector, "p", 1);
  EntityId optics = g.upsert_entity("Optics", EntityType::Sector, "p", 1);
  EntityId a = company(g, "Alpha"), b = company(g, "Beta"), c = company(g, "Gamma");
  link(g, a, RelationType::LocatedIn, austin);
  link(g, a, RelationType::BelongsToSector, optics);
  link(g, b, RelationType::BelongsToSector, robotics);
  link(g, c, RelationType::BelongsToSector, robotics);
  auto signals = detect_geographic_gaps(g, {{"austin", 4}, {"boston", 2}, {"denver", 0}}, 2);
  ASSERT_EQ(signals.size(), 2u);
  EXPECT_EQ(signals[0].focus_names, (std::vector<std::string>{"Austin", "Optics"}));
  EXPECT_DOUBLE_EQ(signals[0].severity, 0.75);
  EXPECT_EQ(signals[0].queries, (std::vector<std::string>{"Optics companies in Austin"}));
  // absent location: observed 0, keyword from the whole graph
  EXPECT_EQ(signals[1].focus_names, (std::vector<std::string>{"boston", "Robotics"}));
  EXPECT_DOUBLE_EQ(signals[1].severity, 1.0);
  EXPECT_TRUE(signals[1].focus.empty());

  KnowledgeGraph empty;
  auto fallback = detect_geographic_gaps(empty, {{"boston", 1}});
  ASSERT_EQ(fallback.size(), 1u);
  EXPECT_EQ(fallback[0].focus_names[1], "industrial");
}

TEST(Signals, SortedDeterministically) {
  KnowledgeGraph g = skewed_sectors();
  Priors p;
  p.locations["austin"] = 2;
  auto first = detect_gaps(g, p, 1);
  auto second = detect_gaps(g, p, 1);
  ASSERT_EQ(first.size(), second.size());
  for (std::size_t i = 0; i < first.size(); ++i) EXPECT_EQ(first[i].key(), second[i].key());
  for (std::size_t i = 1; i < first.size(); ++i) EXPECT_LE(first[i - 1].kind, first[i].kind);
}

TEST(Priors, ParseAndErrors) {
  std::istringstream in(
      "{\"kind\":\"sector\",\"name\":\"Robotics\",\"expected\":5}\n"
      "{\"kind\":\"location\",\"name\":\"Austin, TX\",\"expected\":3}\n");
  Priors p = parse_priors(in);
  EXPECT_EQ(p.sectors.at("robotics"), 5);
  EXPECT_EQ(p.locations.size(), 1u);
  std::istringstream bad("{\"kind\":\"planet\",\"name\":\"x\",\"expected\":1}\n");
  EXPECT_THROW(parse_priors(bad), ParseError);
  std::istringstream negative("\n{\"kind\":\"sector\",\"name\":\"x\",\"expected\":-1}\n");
  try {
    parse_priors(negative);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(load_priors("/nonexistent/priors.jsonl"), IoError);
}

TEST(DirectoryIndex, RanksByTfIdf) {
  DirectoryIndex index;
  index.add_document("https://d.example/a", "robotics suppliers robotics robotics");
  index.add_document("https://d.example/b", "robotics news");
  index.add_document("https://d.example/c", "optics suppliers in Austin");
  auto hits = index.search("robotics suppliers", 3);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].first, "https://d.example/a");
  EXPECT_EQ(index.lookup("the and of", 3).size(), 0u);
  EXPECT_EQ(index.lookup("optics", 5), (std::vector<std::string>{"https://d.example/c"}));
}

TEST(QueryResolution, SkipsFetchedAndDeduplicates) {
  DirectoryIndex index;
  index.add_document("https://d.example/a", "robotics robotics robotics");
  index.add_document("https://d.example/b", "robotics robotics");
  index.add_document("https://d.example/c", "robotics");
  index.add_document("https://d.example/d", "robotics optics");
  auto urls = resolve_queries({"robotics", "robotics optics"}, index, {"https://d.example/a"}, 2);
  EXPECT_EQ(urls, (std::vector<std::string>{"https://d.example/b", "https://d.example/c", "https://d.example/d"}));

  TemplateResolver live({"https://dir.example/search?q={query}", "https://other.example/find/{query}"});
  auto got = live.lookup("wafer stage", 1);
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0].rfind("https://dir.example/search?q=wafer", 0), 0u);
}

TEST(SignalLedger, ExpiresUnproductiveSignals) {
  GapSignal s;
  s.kind = GapKind::DegreeAnomaly;
  s.focus_names = {"Optics"};
  s.severity = 0.6;
  GapSignal t = s;
  t.focus_names = {"Valves"};
  t.severity = 0.9;

  SignalLedger ledger(2);
  auto active = ledger.update({s, t}, 1);
  ASSERT_EQ(active.size(), 2u);
  ledger.record_urls(s, {"https://x.example/1"});
  ledger.record_urls(t, {"https://x.example/1", "https://x.example/2"});
  EXPECT_DOUBLE_EQ(ledger.active_url_severity().at("https://x.example/1"), 0.9);

  ledger.expire(2);
  EXPECT_EQ(ledger.active_count(), 2u);
  ledger.credit("https://x.example/2", 2);  // only Valves produced something
  ledger.expire(3);
  EXPECT_EQ(ledger.active_count(), 1u);
  EXPECT_EQ(ledger.expired_count(), 1u);
  EXPECT_DOUBLE_EQ(ledger.active_url_severity().at("https://x.example/1"), 0.9);

  // expired signals stay expired even if detected again
  active = ledger.update({s}, 4);
  ASSERT_EQ(active.size(), 1u);
  EXPECT_EQ(active[0].focus_names[0], "Valves");
  ledger.expire(4);
  EXPECT_EQ(ledger.active_count(), 0u);
}

TEST(PredictedLink, SignalShape) {
  auto s = predicted_link_signal({1}, "Alpha", {2}, "Beta", 0.73, 4);
  EXPECT_EQ(s.kind, GapKind::PredictedLink);
  EXPECT_DOUBLE_EQ(s.severity, 0.73);
  EXPECT_EQ(s.queries, (std::vector<std::string>{"Alpha supplier Beta"}));
}

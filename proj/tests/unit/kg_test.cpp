#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "support.hpp"
#include "wkw/error.hpp"
#include "wkw/kg.hpp"

using namespace wkw;

TEST(KnowledgeGraph, UpsertReusesAndKeepsFirstSeen) {
  KnowledgeGraph g;
  auto a = g.upsert_entity("ASMPT", EntityType::Company, "p1", 1);
  auto b = g.upsert_entity("asmpt ", EntityType::Company, "p2", 2);
  EXPECT_EQ(a, b);
  EXPECT_EQ(g.entity_count(), 1u);
  EXPECT_EQ(g.entity(a).first_seen_iteration, 1);
  EXPECT_EQ(g.entity(a).source_pages.size(), 2u);
  EXPECT_EQ(g.entity(a).aliases.size(), 2u);
}

TEST(KnowledgeGraph, TypeDisambiguates) {
  KnowledgeGraph g;
  auto a = g.upsert_entity("ASMPT", EntityType::Company, "p", 1);
  auto b = g.upsert_entity("ASMPT", EntityType::Sector, "p", 1);
  EXPECT_NE(a, b);
  EXPECT_EQ(g.entity_count(), 2u);
}

TEST(KnowledgeGraph, EmptyMentionThrows) {
  KnowledgeGraph g;
  EXPECT_THROW(g.upsert_entity("   ", EntityType::Company, "p", 1), InvalidInput);
  Entity e;
  EXPECT_THROW(g.insert_entity(e), InvalidInput);
}

TEST(KnowledgeGraph, InsertClashIsStructural) {
  KnowledgeGraph g;
  g.upsert_entity("Acme", EntityType::Company, "p", 1);
  Entity e;
  e.canonical_name = "acme";
  EXPECT_THROW(g.insert_entity(e), StructuralError);
}

TEST(KnowledgeGraph, AddRelationOutcomes) {
  KnowledgeGraph g;
  auto c = g.upsert_entity("Acme", EntityType::Company, "p", 1);
  auto d = g.upsert_entity("Beta", EntityType::Company, "p", 1);
  auto loc = g.upsert_entity("Austin", EntityType::Location, "p", 1);
  auto prod = g.upsert_entity("Wafer stage", EntityType::Product, "p", 1);

  EXPECT_EQ(g.add_relation({c, loc, RelationType::SuppliesTo, 0.9, "p"}), AddOutcome::TypeViolation);
  EXPECT_EQ(g.add_relation({c, prod, RelationType::Produces, 0.3, "p"}), AddOutcome::Accepted);
  EXPECT_EQ(g.add_relation({c, prod, RelationType::Produces, 0.29, "q"}), AddOutcome::LowConfidence);
  EXPECT_EQ(g.add_relation({c, prod, RelationType::Produces, 0.3, "p"}), AddOutcome::Duplicate);
  EXPECT_EQ(g.add_relation({c, c, RelationType::PartnersWith, 0.9, "p"}), AddOutcome::SelfLoop);
  EXPECT_EQ(g.add_relation({c, d, RelationType::SuppliesTo, 0.9, "p"}), AddOutcome::Accepted);
  EXPECT_EQ(g.relation_count(), 2u);
  EXPECT_THROW(g.add_relation({c, EntityId{99}, RelationType::SuppliesTo, 0.9, "p"}), StructuralError);
}

TEST(KnowledgeGraph, UnfilteredKeepsViolations) {
  KnowledgeGraph g;
  auto c = g.upsert_entity("Acme", EntityType::Company, "p", 1);
  auto loc = g.upsert_entity("Austin", EntityType::Location, "p", 1);
  EXPECT_EQ(g.add_relation_unfiltered({c, loc, RelationType::SuppliesTo, 0.1, "p"}), AddOutcome::Accepted);
  EXPECT_EQ(g.relation_count(), 1u);
  EXPECT_FALSE(audit(g).empty());
}

TEST(TypeConsistency, ReferenceRowsArithmetic) {
  auto report = type_consistency_report(wkw::testing::graph_with_consistency(wkw::testing::kConsistencyRows));
  const double expected[] = {6.5, 61.9, 88.8, 96.2, 94.5};
  for (std::size_t i = 0; i < 5; ++i)
    EXPECT_NEAR(*report.row(kRelationTypes[i]).fraction() * 100, expected[i], 0.05);
  auto total = report.total();
  // The rows add up to 585; a total of 586 (and 85.7%) cannot come from them.
  EXPECT_EQ(total.count, 585u);
  EXPECT_EQ(total.consistent, 502u);
  EXPECT_DOUBLE_EQ(*total.fraction(), 502.0 / 585.0);
}

TEST(TypeConsistency, EmptyGraphIsNotApplicable) {
  auto report = type_consistency_report(KnowledgeGraph{});
  EXPECT_EQ(report.total().count, 0u);
  EXPECT_FALSE(report.total().fraction().has_value());
}

TEST(TypeConsistency, FilteredSurvivorsAreAlwaysConsistent) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    KnowledgeGraph g;
    std::vector<EntityId> ids;
    for (int i = 0; i < 12; ++i)
      ids.push_back(g.upsert_entity("e" + std::to_string(i), kEntityTypes[rng() % 4], "p", 1));
    std::uniform_real_distribution<double> conf(0.0, 1.0);
    for (int k = 0; k < 40; ++k)
      g.add_relation({ids[rng() % ids.size()], ids[rng() % ids.size()], kRelationTypes[rng() % 5], conf(rng),
                      "p" + std::to_string(k % 3)});
    auto total = type_consistency_report(g).total();
    ASSERT_EQ(total.consistent, total.count) << "trial " << trial;
    ASSERT_TRUE(audit(g).empty()) << "trial " << trial;
  }
}

TEST(Snapshot, RoundTrip) {
  KnowledgeGraph g = wkw::testing::graph_with_consistency({{3, 2}, {1, 1}, {0, 0}, {2, 2}, {1, 0}});
  g.upsert_entity("Acme Inc.", EntityType::Company, "https://acme.example/", 3);
  std::stringstream buf;
  export_graph(g, buf);
  KnowledgeGraph back = import_graph(buf);
  EXPECT_TRUE(equivalent(g, back));
  std::stringstream again;
  export_graph(back, again);
  EXPECT_EQ(buf.str(), again.str());
}

TEST(Snapshot, MalformedLineReportsLineNumber) {
  std::stringstream in;
  KnowledgeGraph g;
  g.upsert_entity("Acme", EntityType::Company, "p", 1);
  export_graph(g, in);
  in << "{not json\n";
  try {
    import_graph(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Snapshot, EquivalenceIgnoresIds) {
  KnowledgeGraph a, b;
  auto a1 = a.upsert_entity("Acme", EntityType::Company, "p", 1);
  auto a2 = a.upsert_entity("Beta", EntityType::Company, "p", 1);
  a.add_relation({a1, a2, RelationType::SuppliesTo, 0.9, "p"});
  auto b2 = b.upsert_entity("Beta", EntityType::Company, "p", 1);
  auto b1 = b.upsert_entity("Acme", EntityType::Company, "p", 1);
  b.add_relation({b1, b2, RelationType::SuppliesTo, 0.9, "p"});
  EXPECT_TRUE(equivalent(a, b));
  b.add_relation({b2, b1, RelationType::SuppliesTo, 0.9, "p"});
  EXPECT_FALSE(equivalent(a, b));
}

TEST(KnowledgeGraph, Degrees) {
  KnowledgeGraph g;
  auto a = g.upsert_entity("A", EntityType::Company, "p", 1);
  auto b = g.upsert_entity("B", EntityType::Company, "p", 1);
  auto c = g.upsert_entity("C", EntityType::Company, "p", 1);
  g.add_relation({a, b, RelationType::SuppliesTo, 1, "p"});
  g.add_relation({a, c, RelationType::SuppliesTo, 1, "p"});
  auto d = degrees(g);
  EXPECT_EQ(d[a], 2u);
  EXPECT_EQ(d[b], 1u);
  EXPECT_EQ(d[c], 1u);
}

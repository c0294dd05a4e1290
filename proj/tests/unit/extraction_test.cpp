#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "wkw/error.hpp"
#include "wkw/extraction.hpp"
#include "wkw/text.hpp"

using namespace wkw;

namespace {

PageText page(std::string url, std::string text) { return PageText{std::move(url), std::move(text), {}}; }

bool has_triple(const ExtractionResult& r, const std::string& s, RelationType t, const std::string& d) {
  for (const auto& x : r.triples)
    if (normalize_name(x.source) == normalize_name(s) && x.relation == t &&
        normalize_name(x.target) == normalize_name(d))
      return true;
  return false;
}

}  // namespace

TEST(FixtureExtractor, MarkersCarryTypeAndConfidence) {
  FixtureRuleExtractor ex;
  auto r = ex.extract(page("u", "[[COMPANY: Acme Robotics]] [[PRODUCT: wafer stage :: 0.6]] "
                               "[[produces: Acme Robotics -> wafer stage :: 0.9]]"));
  ASSERT_EQ(r.mentions.size(), 2u);
  EXPECT_EQ(r.mention_type("Acme Robotics"), EntityType::Company);
  EXPECT_EQ(r.mention_type("wafer stage"), EntityType::Product);
  EXPECT_DOUBLE_EQ(r.mentions[1].confidence, 0.6);
  ASSERT_EQ(r.triples.size(), 1u);
  EXPECT_DOUBLE_EQ(r.triples[0].confidence, 0.9);
  EXPECT_TRUE(satisfies_endpoint_closure(r));
}

TEST(FixtureExtractor, SentencePatterns) {
  FixtureRuleExtractor ex;
  auto r = ex.extract(page("u",
                           "Acme Robotics is located in Austin. Acme Robotics manufactures wafer stages. "
                           "Beta Tools partners with Gamma Labs. Gamma Labs operates in the metrology sector. "
                           "Acme Robotics supplies Beta Tools Inc."));
  EXPECT_TRUE(has_triple(r, "Acme Robotics", RelationType::LocatedIn, "Austin"));
  EXPECT_TRUE(has_triple(r, "Acme Robotics", RelationType::Produces, "wafer stages"));
  EXPECT_TRUE(has_triple(r, "Acme Robotics", RelationType::SuppliesTo, "Beta Tools Inc"));
  EXPECT_TRUE(has_triple(r, "Beta Tools", RelationType::PartnersWith, "Gamma Labs"));
  EXPECT_TRUE(has_triple(r, "Gamma Labs", RelationType::BelongsToSector, "metrology"));
  EXPECT_EQ(r.mention_type("Austin"), EntityType::Location);
  EXPECT_EQ(r.mention_type("metrology"), EntityType::Sector);
  EXPECT_TRUE(satisfies_endpoint_closure(r));
}

TEST(FixtureExtractor, ExplicitTypeWinsOverSlotType) {
  FixtureRuleExtractor ex;
  auto r = ex.extract(page("u", "[[LOCATION: Austin]] [[supplies_to: Acme -> Austin :: 0.8]]"));
  EXPECT_EQ(r.mention_type("Austin"), EntityType::Location);
  EXPECT_EQ(r.mention_type("Acme"), EntityType::Company);
  ASSERT_EQ(r.triples.size(), 1u);
}

TEST(FixtureExtractor, MalformedMarkersAreIgnored) {
  FixtureRuleExtractor ex;
  auto r = ex.extract(page("u", "[[COMPANY Acme]] [[supplies_to: A => B]] [[produces: A -> B :: 7]] [[unclosed"));
  EXPECT_TRUE(r.triples.empty());
}

TEST(FixtureExtractor, EmptyPage) {
  FixtureRuleExtractor ex;
  EXPECT_TRUE(ex.extract(page("u", "")).empty());
}

TEST(ExtractionResult, JsonRoundTrip) {
  FixtureRuleExtractor ex;
  auto r = ex.extract(page("u", "Acme supplies Beta. [[SECTOR: Metrology]]"));
  EXPECT_EQ(result_from_json(result_to_json(r)), r);
  EXPECT_THROW(result_from_json("{\"mentions\":[{\"text\":\"x\",\"type\":\"PLANET\"}],\"triples\":[]}"),
               ParseError);
}

TEST(ExtractionCache, TtlAndCorruption) {
  auto t = std::chrono::system_clock::time_point{} + std::chrono::hours(1000);
  ExtractionCache cache(std::chrono::hours(24), [&] { return t; });
  ExtractionResult r;
  r.mentions.push_back({"Acme", EntityType::Company, 1.0});
  cache.put("k", r);
  EXPECT_TRUE(cache.get("k").has_value());
  t += std::chrono::hours(23);
  EXPECT_TRUE(cache.get("k").has_value());
  t += std::chrono::hours(1);
  EXPECT_FALSE(cache.get("k").has_value());
  cache.put_raw("bad", "{truncated");
  EXPECT_FALSE(cache.get("bad").has_value());
}

TEST(CachedExtractor, OneCallPerDistinctPage) {
  FixtureRuleExtractor inner;
  ExtractionCache cache(std::chrono::hours(24));
  CachedExtractor ex(inner, cache);
  auto p = page("u", "Acme supplies Beta.");
  auto a = ex.extract(p);
  auto b = ex.extract(p);
  EXPECT_EQ(a, b);
  EXPECT_EQ(ex.invocations(), 1u);
  ex.extract(page("u", "Acme supplies Gamma."));
  EXPECT_EQ(ex.invocations(), 2u);
}

TEST(CachedExtractor, SaveAndReload) {
  const std::string path = ::testing::TempDir() + "wkw_extraction_cache.jsonl";
  FixtureRuleExtractor inner;
  auto p = page("u", "Acme supplies Beta.");
  {
    ExtractionCache cache(std::chrono::hours(24));
    CachedExtractor ex(inner, cache);
    ex.extract(p);
    cache.save(path);
  }
  ExtractionCache cache(std::chrono::hours(24));
  cache.load(path);
  CachedExtractor ex(inner, cache);
  ex.extract(p);
  EXPECT_EQ(ex.invocations(), 0u);
  std::remove(path.c_str());
}

TEST(RecordedResponses, ReplayAndMiss) {
  const std::string path = ::testing::TempDir() + "wkw_recorded.jsonl";
  auto p = page("https://acme.example/", "anything");
  {
    std::ofstream out(path);
    out << nlohmann::json{{"url", p.url}, {"hash", content_hash(p.text)},
                          {"mentions", {{{"text", "Acme"}, {"type", "COMPANY"}, {"conf", 0.9}}}},
                          {"triples", nlohmann::json::array()}}
               .dump()
        << "\n";
  }
  ExtractorConfig cfg;
  cfg.kind = ExtractorKind::ExternalLlmStub;
  cfg.recorded_responses = path;
  auto ex = make_extractor(cfg);
  auto r = ex->extract(p);
  ASSERT_EQ(r.mentions.size(), 1u);
  EXPECT_EQ(r.mentions[0].surface, "Acme");
  EXPECT_THROW(ex->extract(page("https://acme.example/", "changed")), ExtractorUnavailable);
  std::remove(path.c_str());

  cfg.recorded_responses.clear();
  EXPECT_THROW(make_extractor(cfg), ConfigError);
}

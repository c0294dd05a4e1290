#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "wkw/crawler.hpp"
#include "wkw/fetch.hpp"
#include "wkw/gap_analysis.hpp"
#include "wkw/kg.hpp"

namespace wkw {

struct WorldConfig {
  std::size_t n_companies = 120;   // target (ground-truth) suppliers
  std::size_t n_offtarget = 60;    // unrelated firms living on off-topic sites
  std::size_t n_sectors = 6;
  std::size_t n_locations = 6;
  std::size_t n_products = 14;
  std::size_t n_directory_pages = 8;
  std::size_t listings_per_page = 12;
  std::size_t n_news_pages = 16;
  std::size_t n_offtopic_sites = 6;
  std::size_t offtopic_pages_per_site = 25;
  double presence = 0.9;           // chance a target company appears on any page
  double supply_density = 0.03;    // chance of a visible supplies_to edge per ordered pair
  double offtopic_link_rate = 0.35;  // chance a company page links to an off-topic site
  double noise_rate = 0.15;        // pages carrying a type-violating or low-confidence claim
  // Planted structural holes, only reachable through directory-index queries.
  std::size_t hidden_sectors = 2;
  std::size_t hidden_per_sector = 6;
  std::size_t planted_bridges = 4;
  std::size_t regional_locations = 2;
  std::size_t regional_per_location = 5;
  std::uint64_t seed = 7;

  // Throws ConfigError on an infeasible combination.
  void validate() const;
};

struct WorldTruth {
  KnowledgeGraph graph;                      // every entity and true relation
  std::set<std::string> targets;             // normalized target company names
  std::set<std::string> planted;             // targets only listed on orphan pages
  std::map<std::string, std::set<std::string>> page_entities;  // url -> normalized names

  // Target companies mentioned on at least one page.
  std::set<std::string> discoverable() const;

  void write(std::ostream& out) const;
  static WorldTruth read(std::istream& in);
  void save(const std::string& path) const;
  static WorldTruth load(const std::string& path);
};

struct World {
  SimulatedWeb web;
  WorldTruth truth;
  std::vector<Seed> seeds;
  Priors priors;
};

World generate_world(const WorldConfig& config);

void write_seeds(const std::vector<Seed>& seeds, std::ostream& out);
void write_priors(const Priors& priors, std::ostream& out);

// Companion files sit next to the world file: world.json pairs with
// world.truth.jsonl, world.seeds.jsonl and world.priors.jsonl.
struct WorldFiles {
  std::string world;
  std::string truth;
  std::string seeds;
  std::string priors;
};

WorldFiles world_files(const std::string& world_path);
// Writes the web and its three companions. Throws IoError.
void save_world(const World& world, const std::string& world_path);

struct EvalMetrics {
  std::size_t discovered = 0;
  std::size_t true_positives = 0;
  std::size_t ground_truth = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

EvalMetrics metrics_from_counts(std::size_t discovered, std::size_t tp, std::size_t gt);
// Companies matched by normalized name against the target set.
EvalMetrics evaluate_against_truth(const KnowledgeGraph& graph, const WorldTruth& truth);

// Entities per charged page. Throws InvalidInput when pages_used is 0.
double crawl_efficiency(std::size_t n_discovered, std::size_t pages_used);

// Company graph with planted surface variants, for resolution quality checks.
struct AliasCorpus {
  KnowledgeGraph graph;
  // Pairs of canonical names that denote the same firm.
  std::set<std::pair<std::string, std::string>> same;
};

AliasCorpus make_alias_corpus(std::size_t alias_pairs, std::size_t distinct, std::uint64_t seed);

}  // namespace wkw

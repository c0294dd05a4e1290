#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "wkw/coverage.hpp"
#include "wkw/kg.hpp"

namespace wkw::testing {

inline std::string fixture(const std::string& name) { return std::string(WKW_FIXTURE_DIR) + "/" + name; }

// A raw graph whose relation types carry exactly the given (count, consistent)
// pairs, in kRelationTypes order. Inconsistent rows point at the wrong type.
inline KnowledgeGraph graph_with_consistency(const std::vector<std::pair<int, int>>& rows) {
  KnowledgeGraph g;
  EntityId company = g.upsert_entity("Anchor Corp", EntityType::Company, "p", 1);
  EntityId other = g.upsert_entity("Other Corp", EntityType::Company, "p", 1);
  EntityId product = g.upsert_entity("Widget", EntityType::Product, "p", 1);
  EntityId place = g.upsert_entity("Austin", EntityType::Location, "p", 1);
  EntityId sector = g.upsert_entity("Robotics", EntityType::Sector, "p", 1);
  auto good_target = [&](RelationType t) {
    switch (allowed_endpoints(t).target) {
      case EntityType::Company: return other;
      case EntityType::Product: return product;
      case EntityType::Location: return place;
      case EntityType::Sector: return sector;
    }
    return other;
  };
  auto bad_target = [&](RelationType t) { return allowed_endpoints(t).target == EntityType::Location ? sector : place; };
  for (std::size_t i = 0; i < rows.size(); ++i) {
    RelationType t = kRelationTypes[i];
    for (int k = 0; k < rows[i].first; ++k) {
      EntityId dst = k < rows[i].second ? good_target(t) : bad_target(t);
      g.add_relation_unfiltered({company, dst, t, 0.9, "page-" + std::to_string(i) + "-" + std::to_string(k)});
    }
  }
  return g;
}

inline const std::vector<std::pair<int, int>> kConsistencyRows = {{31, 2}, {42, 26}, {215, 191}, {133, 128}, {164, 155}};

// Homogeneous capture: every entity is caught by every source with
// probability p. Uncaught entities are absent from the matrix.
inline IncidenceMatrix capture_trial(std::size_t population, std::size_t sources, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution hit(p);
  std::map<std::string, std::set<std::string>> seen;
  for (std::size_t e = 0; e < population; ++e) {
    std::set<std::string> s;
    for (std::size_t j = 0; j < sources; ++j)
      if (hit(rng)) s.insert("s" + std::to_string(j));
    if (!s.empty()) seen["e" + std::to_string(e)] = std::move(s);
  }
  return IncidenceMatrix::from_sets(seen);
}

// Stochastic block model of companies: dense supplies_to within blocks,
// nothing across. Returns the graph minus a held-out share of its edges.
struct BlockModel {
  KnowledgeGraph train;
  std::vector<std::pair<std::string, std::string>> held_out;  // canonical names
  std::size_t companies = 0;
  std::size_t train_edges = 0;
};

inline BlockModel block_model(std::size_t blocks, std::size_t per_block, double p_in, double held_share,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  const std::size_t n = blocks * per_block;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (a != b && a / per_block == b / per_block && u(rng) < p_in) edges.emplace_back(a, b);
  std::shuffle(edges.begin(), edges.end(), rng);
  const std::size_t held = static_cast<std::size_t>(held_share * edges.size());
  BlockModel m;
  m.companies = n;
  std::vector<EntityId> ids;
  auto name = [](std::size_t i) { return "firm " + std::to_string(i); };
  for (std::size_t i = 0; i < n; ++i) ids.push_back(m.train.upsert_entity(name(i), EntityType::Company, "sbm", 1));
  for (std::size_t i = 0; i < edges.size(); ++i) {
    auto [a, b] = edges[i];
    if (i < held) {
      m.held_out.emplace_back(name(a), name(b));
    } else {
      m.train.add_relation({ids[a], ids[b], RelationType::SuppliesTo, 1.0, "sbm"});
      ++m.train_edges;
    }
  }
  return m;
}

}  // namespace wkw::testing

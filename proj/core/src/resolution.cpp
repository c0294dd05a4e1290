#include "wkw/resolution.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "wkw/text.hpp"

namespace wkw {

namespace {

double jaro(std::string_view a, std::string_view b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  const std::size_t window =
      std::max<std::size_t>(std::max(a.size(), b.size()) / 2, 1) - 1;
  std::vector<bool> a_hit(a.size(), false), b_hit(b.size(), false);
  std::size_t matches = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::size_t lo = i > window ? i - window : 0;
    std::size_t hi = std::min(i + window + 1, b.size());
    for (std::size_t j = lo; j < hi; ++j) {
      if (b_hit[j] || a[i] != b[j]) continue;
      a_hit[i] = b_hit[j] = true;
      ++matches;
      break;
    }
  }
  if (matches == 0) return 0.0;
  std::size_t transpositions = 0;
  for (std::size_t i = 0, j = 0; i < a.size(); ++i) {
    if (!a_hit[i]) continue;
    while (!b_hit[j]) ++j;
    if (a[i] != b[j]) ++transpositions;
    ++j;
  }
  const double m = static_cast<double>(matches);
  return (m / a.size() + m / b.size() + (m - transpositions / 2.0) / m) / 3.0;
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[std::max(a, b)] = std::min(a, b);
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
};

bool better_survivor(const Entity& a, const Entity& b) {
  if (a.canonical_name.size() != b.canonical_name.size())
    return a.canonical_name.size() < b.canonical_name.size();
  return a.canonical_name < b.canonical_name;
}

// One resolution pass; returns false when nothing merged.
bool resolve_pass(const KnowledgeGraph& in, double threshold, KnowledgeGraph& out,
                  std::vector<MergeRecord>& log) {
  std::vector<EntityId> ids;
  std::map<EntityId, std::size_t> index;
  for (const auto& [id, e] : in.entities()) {
    index[id] = ids.size();
    ids.push_back(id);
  }
  UnionFind uf(ids.size());
  struct PendingMerge {
    EntityId a, b;
    double score;
  };
  std::vector<PendingMerge> merges;

  // Exact normalized-name merges for every type.
  std::map<std::pair<std::string, EntityType>, EntityId> exact;
  for (EntityId id : ids) {
    const Entity& e = in.entity(id);
    auto [it, fresh] = exact.try_emplace({normalize_name(e.canonical_name), e.type}, id);
    if (!fresh && uf.unite(index[it->second], index[id])) merges.push_back({it->second, id, 1.0});
  }

  std::vector<EntityId> companies;
  for (EntityId id : ids)
    if (in.entity(id).type == EntityType::Company) companies.push_back(id);
  std::map<EntityId, std::vector<std::string>> attrs;
  for (EntityId id : companies) attrs[id] = company_attributes(in, id);

  for (const Block& block : build_blocks(in, companies)) {
    const auto& m = block.members;
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (std::size_t j = i + 1; j < m.size(); ++j) {
        std::string na = normalize_name(in.entity(m[i]).canonical_name);
        std::string nb = normalize_name(in.entity(m[j]).canonical_name);
        if (na == nb) continue;  // handled by the exact pass
        MatchScore s =
            match_score(jaro_winkler(na, nb), attribute_overlap(attrs[m[i]], attrs[m[j]]));
        if (s.combined > threshold && uf.unite(index[m[i]], index[m[j]]))
          merges.push_back({m[i], m[j], s.combined});
      }
    }
  }
  if (merges.empty()) return false;

  // Pick a survivor per class and build merged entities.
  std::map<std::size_t, EntityId> survivor;
  for (EntityId id : ids) {
    std::size_t root = uf.find(index[id]);
    auto it = survivor.find(root);
    if (it == survivor.end() || better_survivor(in.entity(id), in.entity(it->second)))
      survivor[root] = id;
  }
  std::map<EntityId, Entity> merged;
  for (EntityId id : ids) {
    EntityId s = survivor[uf.find(index[id])];
    const Entity& src = in.entity(id);
    Entity& dst = merged.try_emplace(s, in.entity(s)).first->second;
    if (id == s) continue;
    dst.aliases.insert(src.aliases.begin(), src.aliases.end());
    dst.source_pages.insert(src.source_pages.begin(), src.source_pages.end());
    dst.first_seen_iteration = std::min(dst.first_seen_iteration, src.first_seen_iteration);
  }
  for (const PendingMerge& pm : merges) {
    EntityId s = survivor[uf.find(index[pm.a])];
    EntityId absorbed = pm.a == s ? pm.b : pm.a;
    log.push_back({in.entity(s).canonical_name, in.entity(absorbed).canonical_name, pm.score});
  }

  out = KnowledgeGraph();
  out.set_iteration(in.iteration());
  std::map<EntityId, EntityId> remap;
  for (auto& [old_id, e] : merged) remap[old_id] = out.insert_entity(e);
  for (const Relation& r : in.relations()) {
    Relation moved = r;
    moved.source = remap.at(survivor[uf.find(index[r.source])]);
    moved.target = remap.at(survivor[uf.find(index[r.target])]);
    out.add_relation_unfiltered(moved);
  }
  return true;
}

}  // namespace

double jaro_winkler(std::string_view a, std::string_view b) {
  double sim = jaro(a, b);
  std::size_t prefix = 0;
  const std::size_t max_prefix = std::min<std::size_t>({4, a.size(), b.size()});
  while (prefix < max_prefix && a[prefix] == b[prefix]) ++prefix;
  return sim + static_cast<double>(prefix) * 0.1 * (1.0 - sim);
}

MatchScore match_score(double name_similarity, double attribute_overlap) {
  return {name_similarity, attribute_overlap,
          kNameWeight * name_similarity + kAttributeWeight * attribute_overlap};
}

std::string block_key(std::string_view name) {
  std::string n = normalize_name(name);
  return n.substr(0, std::min(n.size(), kBlockPrefixLength));
}

std::vector<Block> build_blocks(const KnowledgeGraph& graph,
                                const std::vector<EntityId>& companies) {
  std::map<std::string, Block> blocks;
  for (EntityId id : companies) {
    std::string key = block_key(graph.entity(id).canonical_name);
    Block& b = blocks[key];
    b.key = key;
    b.members.push_back(id);
  }
  std::vector<Block> out;
  out.reserve(blocks.size());
  for (auto& [key, b] : blocks) out.push_back(std::move(b));
  return out;
}

std::vector<std::string> company_attributes(const KnowledgeGraph& graph, EntityId company) {
  std::set<std::string> attrs;
  for (const Relation& r : graph.relations()) {
    if (r.source != company) continue;
    if (r.type != RelationType::Produces && r.type != RelationType::LocatedIn) continue;
    const Entity& t = graph.entity(r.target);
    attrs.insert(std::string(to_string(t.type)) + ":" + normalize_name(t.canonical_name));
  }
  return {attrs.begin(), attrs.end()};
}

double attribute_overlap(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::vector<std::string> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  const double uni = static_cast<double>(a.size() + b.size() - common.size());
  return static_cast<double>(common.size()) / uni;
}

ResolveResult resolve(const KnowledgeGraph& graph, double threshold) {
  ResolveResult result{graph, {}};
  KnowledgeGraph next;
  while (resolve_pass(result.graph, threshold, next, result.merge_log))
    result.graph = std::move(next);
  return result;
}

std::string merge_log_to_jsonl(const std::vector<MergeRecord>& log) {
  std::ostringstream out;
  for (const MergeRecord& m : log)
    out << nlohmann::json{{"survivor", m.survivor}, {"absorbed", m.absorbed}, {"combined", m.combined}}
               .dump()
        << '\n';
  return out.str();
}

}  // namespace wkw

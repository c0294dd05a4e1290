#include "wkw/kg.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "wkw/error.hpp"
#include "wkw/text.hpp"

namespace wkw {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 4> kEntityNames = {"COMPANY", "PRODUCT", "SECTOR",
                                                          "LOCATION"};
constexpr std::array<std::string_view, 5> kRelationNames = {
    "supplies_to", "partners_with", "produces", "located_in", "belongs_to_sector"};

}  // namespace

std::string_view to_string(EntityType t) { return kEntityNames[static_cast<std::size_t>(t)]; }

std::string_view to_string(RelationType t) {
  return kRelationNames[static_cast<std::size_t>(t)];
}

std::optional<EntityType> parse_entity_type(std::string_view s) {
  std::string up(s);
  std::transform(up.begin(), up.end(), up.begin(), ::toupper);
  for (std::size_t i = 0; i < kEntityNames.size(); ++i)
    if (up == kEntityNames[i]) return static_cast<EntityType>(i);
  return std::nullopt;
}

std::optional<RelationType> parse_relation_type(std::string_view s) {
  std::string low = to_lower(s);
  for (std::size_t i = 0; i < kRelationNames.size(); ++i)
    if (low == kRelationNames[i]) return static_cast<RelationType>(i);
  return std::nullopt;
}

std::string_view to_string(AddOutcome o) {
  switch (o) {
    case AddOutcome::Accepted: return "accepted";
    case AddOutcome::TypeViolation: return "type_violation";
    case AddOutcome::LowConfidence: return "low_confidence";
    case AddOutcome::Duplicate: return "duplicate";
    case AddOutcome::SelfLoop: return "self_loop";
  }
  return "unknown";
}

EntityId KnowledgeGraph::upsert_entity(std::string_view mention, EntityType type,
                                       std::string_view page, int iteration) {
  std::string key = normalize_name(mention);
  if (key.empty()) throw InvalidInput("entity mention is empty");
  auto it = by_name_.find({key, type});
  if (it != by_name_.end()) {
    Entity& e = entities_.at(it->second);
    e.aliases.insert(trim(mention));
    if (!page.empty()) e.source_pages.insert(std::string(page));
    return e.id;
  }
  Entity e;
  e.canonical_name = key;
  e.type = type;
  e.aliases.insert(trim(mention));
  if (!page.empty()) e.source_pages.insert(std::string(page));
  e.first_seen_iteration = iteration;
  return insert_entity(std::move(e));
}

EntityId KnowledgeGraph::insert_entity(Entity entity) {
  if (entity.canonical_name.empty()) throw InvalidInput("entity name is empty");
  NameKey key{entity.canonical_name, entity.type};
  if (by_name_.count(key))
    throw StructuralError("duplicate entity " + entity.canonical_name + " (" +
                          std::string(to_string(entity.type)) + ")");
  entity.id = EntityId{next_id_++};
  by_name_.emplace(std::move(key), entity.id);
  EntityId id = entity.id;
  entities_.emplace(id, std::move(entity));
  return id;
}

void KnowledgeGraph::check_endpoints(const Relation& r) const {
  if (!contains(r.source) || !contains(r.target))
    throw StructuralError("relation endpoint does not exist in graph");
  if (!(r.confidence >= 0.0 && r.confidence <= 1.0))
    throw InvalidInput("relation confidence outside [0,1]");
}

bool KnowledgeGraph::satisfies_type_constraint(const Relation& r) const {
  auto allowed = allowed_endpoints(r.type);
  return entity(r.source).type == allowed.source && entity(r.target).type == allowed.target;
}

AddOutcome KnowledgeGraph::add_relation(const Relation& r, double min_confidence) {
  check_endpoints(r);
  if (!satisfies_type_constraint(r)) return AddOutcome::TypeViolation;
  if (r.confidence < min_confidence) return AddOutcome::LowConfidence;
  return add_relation_unfiltered(r);
}

AddOutcome KnowledgeGraph::add_relation_unfiltered(const Relation& r) {
  check_endpoints(r);
  if (r.source == r.target) return AddOutcome::SelfLoop;
  RelationKey key{r.source.value, r.target.value, r.type, r.source_page};
  if (!relation_keys_.insert(std::move(key)).second) return AddOutcome::Duplicate;
  relations_.push_back(r);
  return AddOutcome::Accepted;
}

const Entity& KnowledgeGraph::entity(EntityId id) const {
  auto it = entities_.find(id);
  if (it == entities_.end()) throw StructuralError("unknown entity id " + std::to_string(id.value));
  return it->second;
}

const Entity* KnowledgeGraph::find(std::string_view canonical_name, EntityType type) const {
  auto it = by_name_.find({std::string(canonical_name), type});
  return it == by_name_.end() ? nullptr : &entities_.at(it->second);
}

const Entity* KnowledgeGraph::find_normalized(std::string_view mention, EntityType type) const {
  return find(normalize_name(mention), type);
}

std::size_t KnowledgeGraph::count(EntityType type) const {
  return static_cast<std::size_t>(std::count_if(
      entities_.begin(), entities_.end(), [&](const auto& kv) { return kv.second.type == type; }));
}

std::size_t KnowledgeGraph::count(RelationType type) const {
  return static_cast<std::size_t>(std::count_if(
      relations_.begin(), relations_.end(), [&](const Relation& r) { return r.type == type; }));
}

std::optional<double> TypeConsistencyRow::fraction() const {
  if (count == 0) return std::nullopt;
  return static_cast<double>(consistent) / static_cast<double>(count);
}

TypeConsistencyRow TypeConsistencyReport::total() const {
  TypeConsistencyRow t;
  for (const auto& row : by_type) {
    t.count += row.count;
    t.consistent += row.consistent;
  }
  return t;
}

TypeConsistencyReport type_consistency_report(const KnowledgeGraph& graph) {
  TypeConsistencyReport report;
  for (const Relation& r : graph.relations()) {
    auto& row = report.by_type[static_cast<std::size_t>(r.type)];
    ++row.count;
    if (graph.satisfies_type_constraint(r)) ++row.consistent;
  }
  return report;
}

void export_graph(const KnowledgeGraph& graph, std::ostream& out) {
  for (const auto& [id, e] : graph.entities()) {
    json j = {{"kind", "entity"},
              {"name", e.canonical_name},
              {"type", to_string(e.type)},
              {"aliases", e.aliases},
              {"pages", e.source_pages},
              {"iter", e.first_seen_iteration}};
    out << j.dump() << '\n';
  }
  for (const Relation& r : graph.relations()) {
    const Entity& s = graph.entity(r.source);
    const Entity& t = graph.entity(r.target);
    json j = {{"kind", "relation"},     {"src", s.canonical_name}, {"src_type", to_string(s.type)},
              {"dst", t.canonical_name}, {"dst_type", to_string(t.type)},
              {"rel", to_string(r.type)}, {"conf", r.confidence}, {"page", r.source_page}};
    out << j.dump() << '\n';
  }
}

namespace {

EntityType entity_type_field(const json& j, const char* field, std::size_t line) {
  auto t = parse_entity_type(j.at(field).get<std::string>());
  if (!t) throw ParseError(std::string("unknown entity type in '") + field + "'", line);
  return *t;
}

}  // namespace

KnowledgeGraph import_graph(std::istream& in) {
  KnowledgeGraph graph;
  std::string text;
  std::size_t line_no = 0;
  bool seen_relation = false;
  while (std::getline(in, text)) {
    ++line_no;
    if (trim(text).empty()) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    try {
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "entity") {
        if (seen_relation) throw ParseError("entity line after relation lines", line_no);
        Entity e;
        e.canonical_name = j.at("name").get<std::string>();
        e.type = entity_type_field(j, "type", line_no);
        e.aliases = j.value("aliases", std::set<std::string>{});
        e.source_pages = j.value("pages", std::set<std::string>{});
        e.first_seen_iteration = j.value("iter", 1);
        graph.insert_entity(std::move(e));
      } else if (kind == "relation") {
        seen_relation = true;
        auto rel = parse_relation_type(j.at("rel").get<std::string>());
        if (!rel) throw ParseError("unknown relation type", line_no);
        const Entity* s =
            graph.find(j.at("src").get<std::string>(), entity_type_field(j, "src_type", line_no));
        const Entity* t =
            graph.find(j.at("dst").get<std::string>(), entity_type_field(j, "dst_type", line_no));
        if (!s || !t) throw ParseError("relation references a missing entity", line_no);
        Relation r{s->id, t->id, *rel, j.at("conf").get<double>(),
                   j.value("page", std::string{})};
        if (!(r.confidence >= 0.0 && r.confidence <= 1.0))
          throw ParseError("relation confidence outside [0,1]", line_no);
        if (graph.add_relation_unfiltered(r) == AddOutcome::SelfLoop)
          throw ParseError("self-loop relation", line_no);
      } else {
        throw ParseError("unknown record kind '" + kind + "'", line_no);
      }
    } catch (const ParseError&) {
      throw;
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad record: ") + e.what(), line_no);
    } catch (const Error& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return graph;
}

void save_graph(const KnowledgeGraph& graph, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  export_graph(graph, out);
  if (!out) throw IoError("write failed for " + path);
}

KnowledgeGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  return import_graph(in);
}

namespace {

using EntityKey = std::pair<std::string, EntityType>;
using CanonicalEntity =
    std::tuple<std::string, EntityType, std::set<std::string>, std::set<std::string>, int>;
using CanonicalRelation =
    std::tuple<EntityKey, EntityKey, RelationType, double, std::string>;

std::vector<CanonicalEntity> canonical_entities(const KnowledgeGraph& g) {
  std::vector<CanonicalEntity> out;
  for (const auto& [id, e] : g.entities())
    out.emplace_back(e.canonical_name, e.type, e.aliases, e.source_pages, e.first_seen_iteration);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<CanonicalRelation> canonical_relations(const KnowledgeGraph& g) {
  std::vector<CanonicalRelation> out;
  for (const Relation& r : g.relations()) {
    const Entity& s = g.entity(r.source);
    const Entity& t = g.entity(r.target);
    out.emplace_back(EntityKey{s.canonical_name, s.type}, EntityKey{t.canonical_name, t.type},
                     r.type, r.confidence, r.source_page);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

bool equivalent(const KnowledgeGraph& a, const KnowledgeGraph& b) {
  return a.entity_count() == b.entity_count() && a.relation_count() == b.relation_count() &&
         canonical_entities(a) == canonical_entities(b) &&
         canonical_relations(a) == canonical_relations(b);
}

std::vector<std::string> audit(const KnowledgeGraph& graph) {
  std::vector<std::string> issues;
  std::set<EntityKey> keys;
  for (const auto& [id, e] : graph.entities()) {
    if (e.canonical_name.empty()) issues.push_back("entity " + std::to_string(id.value) + ": empty name");
    if (e.source_pages.empty())
      issues.push_back("entity '" + e.canonical_name + "': no source pages");
    if (e.first_seen_iteration < 1)
      issues.push_back("entity '" + e.canonical_name + "': first_seen_iteration < 1");
    if (!keys.insert({e.canonical_name, e.type}).second)
      issues.push_back("entity '" + e.canonical_name + "': duplicate name/type");
  }
  std::set<std::tuple<std::uint32_t, std::uint32_t, RelationType, std::string>> seen;
  for (const Relation& r : graph.relations()) {
    if (!graph.contains(r.source) || !graph.contains(r.target)) {
      issues.push_back("relation with dangling endpoint");
      continue;
    }
    std::string label = graph.entity(r.source).canonical_name + " -" +
                        std::string(to_string(r.type)) + "-> " +
                        graph.entity(r.target).canonical_name;
    if (r.source == r.target) issues.push_back(label + ": self loop");
    if (!(r.confidence >= 0.0 && r.confidence <= 1.0))
      issues.push_back(label + ": confidence outside [0,1]");
    else if (r.confidence < kRelationConfidenceThreshold)
      issues.push_back(label + ": confidence below threshold");
    if (!graph.satisfies_type_constraint(r)) issues.push_back(label + ": type violation");
    if (!seen.insert({r.source.value, r.target.value, r.type, r.source_page}).second)
      issues.push_back(label + ": duplicate relation");
  }
  return issues;
}

std::map<EntityId, std::size_t> degrees(const KnowledgeGraph& graph) {
  std::map<EntityId, std::size_t> deg;
  for (const auto& [id, e] : graph.entities()) deg[id] = 0;
  for (const Relation& r : graph.relations()) {
    ++deg[r.source];
    ++deg[r.target];
  }
  return deg;
}

}  // namespace wkw

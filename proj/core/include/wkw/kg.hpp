#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace wkw {

enum class EntityType : std::uint8_t { Company, Product, Sector, Location };
enum class RelationType : std::uint8_t {
  SuppliesTo,
  PartnersWith,
  Produces,
  LocatedIn,
  BelongsToSector
};

inline constexpr std::array<EntityType, 4> kEntityTypes = {
    EntityType::Company, EntityType::Product, EntityType::Sector, EntityType::Location};
inline constexpr std::array<RelationType, 5> kRelationTypes = {
    RelationType::SuppliesTo, RelationType::PartnersWith, RelationType::Produces,
    RelationType::LocatedIn, RelationType::BelongsToSector};

// "COMPANY", "PRODUCT", ...
std::string_view to_string(EntityType t);
// "supplies_to", "partners_with", ...
std::string_view to_string(RelationType t);
// Both are case-insensitive.
std::optional<EntityType> parse_entity_type(std::string_view s);
std::optional<RelationType> parse_relation_type(std::string_view s);

struct EndpointTypes {
  EntityType source;
  EntityType target;
};

// Schema-level type constraint table. Every relation type has a company source.
constexpr EndpointTypes allowed_endpoints(RelationType r) {
  switch (r) {
    case RelationType::SuppliesTo:
    case RelationType::PartnersWith:
      return {EntityType::Company, EntityType::Company};
    case RelationType::Produces:
      return {EntityType::Company, EntityType::Product};
    case RelationType::LocatedIn:
      return {EntityType::Company, EntityType::Location};
    case RelationType::BelongsToSector:
      return {EntityType::Company, EntityType::Sector};
  }
  return {EntityType::Company, EntityType::Company};
}

// Relations strictly below this confidence are dropped.
inline constexpr double kRelationConfidenceThreshold = 0.3;

struct EntityId {
  std::uint32_t value = 0;
  friend auto operator<=>(const EntityId&, const EntityId&) = default;
};

struct Entity {
  EntityId id;
  std::string canonical_name;
  EntityType type = EntityType::Company;
  std::set<std::string> aliases;
  std::set<std::string> source_pages;
  int first_seen_iteration = 1;
};

struct Relation {
  EntityId source;
  EntityId target;
  RelationType type = RelationType::SuppliesTo;
  double confidence = 1.0;
  std::string source_page;
};

enum class AddOutcome { Accepted, TypeViolation, LowConfidence, Duplicate, SelfLoop };

std::string_view to_string(AddOutcome o);

// Typed heterogeneous graph. Entity identity is (canonical_name, type);
// ids are sequential per graph and carry no meaning across graphs.
class KnowledgeGraph {
 public:
  // Reuses the entity whose normalized name and type match, otherwise creates
  // one. Throws InvalidInput when the mention normalizes to empty.
  EntityId upsert_entity(std::string_view mention, EntityType type, std::string_view page,
                         int iteration);

  // Inserts a fully formed entity; the id field is ignored and reassigned.
  // Throws InvalidInput on an empty name and StructuralError on a key clash.
  EntityId insert_entity(Entity entity);

  // Filtered insert: type constraints, confidence threshold, exact dedup.
  // Throws StructuralError on a dangling endpoint.
  AddOutcome add_relation(const Relation& relation,
                          double min_confidence = kRelationConfidenceThreshold);

  // Stores a relation without type/confidence filtering. Still dedups and
  // still rejects dangling endpoints and self loops.
  AddOutcome add_relation_unfiltered(const Relation& relation);

  const Entity& entity(EntityId id) const;
  bool contains(EntityId id) const { return entities_.count(id) != 0; }
  const Entity* find(std::string_view canonical_name, EntityType type) const;
  const Entity* find_normalized(std::string_view mention, EntityType type) const;

  const std::map<EntityId, Entity>& entities() const { return entities_; }
  const std::vector<Relation>& relations() const { return relations_; }

  std::size_t entity_count() const { return entities_.size(); }
  std::size_t relation_count() const { return relations_.size(); }
  std::size_t count(EntityType type) const;
  std::size_t count(RelationType type) const;

  bool satisfies_type_constraint(const Relation& relation) const;

  int iteration() const { return iteration_; }
  void set_iteration(int t) { iteration_ = t; }

 private:
  using NameKey = std::pair<std::string, EntityType>;
  using RelationKey = std::tuple<std::uint32_t, std::uint32_t, RelationType, std::string>;

  void check_endpoints(const Relation& relation) const;

  std::map<EntityId, Entity> entities_;
  std::map<NameKey, EntityId> by_name_;
  std::vector<Relation> relations_;
  std::set<RelationKey> relation_keys_;
  std::uint32_t next_id_ = 0;
  int iteration_ = 0;
};

struct TypeConsistencyRow {
  std::size_t count = 0;
  std::size_t consistent = 0;
  // Fraction in [0,1]; nullopt for an empty row.
  std::optional<double> fraction() const;
};

struct TypeConsistencyReport {
  std::array<TypeConsistencyRow, 5> by_type{};
  TypeConsistencyRow total() const;
  const TypeConsistencyRow& row(RelationType t) const {
    return by_type[static_cast<std::size_t>(t)];
  }
};

TypeConsistencyReport type_consistency_report(const KnowledgeGraph& graph);

// Line-delimited JSON snapshot: entity lines first, then relation lines.
void export_graph(const KnowledgeGraph& graph, std::ostream& out);
// Throws ParseError carrying the 1-based line number.
KnowledgeGraph import_graph(std::istream& in);

void save_graph(const KnowledgeGraph& graph, const std::string& path);
KnowledgeGraph load_graph(const std::string& path);

// Deep equality modulo id relabeling; relations compared as multisets.
bool equivalent(const KnowledgeGraph& a, const KnowledgeGraph& b);

// Human-readable invariant violations; empty when the graph is sound.
std::vector<std::string> audit(const KnowledgeGraph& graph);

// Total degree (in + out) per entity.
std::map<EntityId, std::size_t> degrees(const KnowledgeGraph& graph);

}  // namespace wkw

template <>
struct std::hash<wkw::EntityId> {
  std::size_t operator()(const wkw::EntityId& id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};

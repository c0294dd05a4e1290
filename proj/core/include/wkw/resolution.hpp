#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "wkw/kg.hpp"

namespace wkw {

// Jaro-Winkler similarity with prefix scale 0.1 and a maximum prefix of 4.
// Both empty -> 1.0; exactly one empty -> 0.0.
double jaro_winkler(std::string_view a, std::string_view b);

inline constexpr double kMergeThreshold = 0.85;
inline constexpr double kNameWeight = 0.7;
inline constexpr double kAttributeWeight = 0.3;
inline constexpr std::size_t kBlockPrefixLength = 4;

struct MatchScore {
  double name_similarity = 0.0;
  double attribute_overlap = 0.0;
  double combined = 0.0;
};

MatchScore match_score(double name_similarity, double attribute_overlap);

struct Block {
  std::string key;
  std::vector<EntityId> members;
};

// First four characters of the suffix-stripped normalized name.
std::string block_key(std::string_view name);

// Partitions the given company entities by block key. Blocks are ordered by
// key; members keep input order.
std::vector<Block> build_blocks(const KnowledgeGraph& graph, const std::vector<EntityId>& companies);

// Normalized names of the products and locations linked to a company.
std::vector<std::string> company_attributes(const KnowledgeGraph& graph, EntityId company);

// Jaccard overlap of two sorted attribute lists; 0 when both are empty.
double attribute_overlap(const std::vector<std::string>& a, const std::vector<std::string>& b);

struct MergeRecord {
  std::string survivor;
  std::string absorbed;
  double combined = 0.0;
};

struct ResolveResult {
  KnowledgeGraph graph;
  std::vector<MergeRecord> merge_log;
};

// Blocking + Jaro-Winkler entity resolution. Companies merge when their
// normalized names are identical or the combined score exceeds the threshold;
// other types merge only on identical normalized names. Passes repeat until
// no merge happens, so the result is a fixpoint.
ResolveResult resolve(const KnowledgeGraph& graph, double threshold = kMergeThreshold);

std::string merge_log_to_jsonl(const std::vector<MergeRecord>& log);

}  // namespace wkw

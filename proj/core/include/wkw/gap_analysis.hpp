#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "wkw/fetch.hpp"
#include "wkw/kg.hpp"

namespace wkw {

enum class GapKind { DegreeAnomaly, MissingBridge, GeographicGap, PredictedLink };

std::string_view to_string(GapKind k);

struct GapSignal {
  GapKind kind = GapKind::DegreeAnomaly;
  std::vector<EntityId> focus;
  // Display names of the focus. Geographic gaps carry {location, keyword}.
  std::vector<std::string> focus_names;
  double severity = 0.0;  // (0, 1]
  std::vector<std::string> queries;
  int created_iteration = 0;

  // Stable identity across iterations: kind plus focus names.
  std::string key() const;
};

// Expected minimum company counts, keyed by normalized name.
struct Priors {
  std::map<std::string, int> sectors;
  std::map<std::string, int> locations;
};

// Line-delimited {"kind":"sector"|"location", "name":..., "expected":int}.
Priors parse_priors(std::istream& in);
Priors load_priors(const std::string& path);

// Surface form used in queries: the first alias, else the canonical name.
std::string display_name(const Entity& e);

inline constexpr double kAnomalyZThreshold = -1.0;
inline constexpr double kMadScale = 1.4826;
inline constexpr double kBridgeSeverity = 0.5;

// Number of distinct companies linked to each sector by belongs_to_sector.
std::map<EntityId, std::size_t> sector_company_degrees(const KnowledgeGraph& graph);

std::vector<GapSignal> detect_degree_anomalies(const KnowledgeGraph& graph,
                                               const std::map<std::string, int>& sector_priors,
                                               int iteration = 0);
std::vector<GapSignal> detect_missing_bridges(const KnowledgeGraph& graph, int iteration = 0);
// Prior locations missing from the graph count as observed 0.
std::vector<GapSignal> detect_geographic_gaps(const KnowledgeGraph& graph,
                                              const std::map<std::string, int>& location_priors,
                                              int iteration = 0);

GapSignal predicted_link_signal(EntityId head, const std::string& head_name, EntityId tail,
                                const std::string& tail_name, double probability, int iteration);

std::vector<std::string> expand_queries(const GapSignal& signal, const KnowledgeGraph& graph);

// Sorts by kind, then joined focus names.
void sort_signals(std::vector<GapSignal>& signals);

// All three structural detectors, queries filled in, sorted.
std::vector<GapSignal> detect_gaps(const KnowledgeGraph& graph, const Priors& priors,
                                   int iteration = 0);

// Maps a query to candidate seed urls, best first.
class QueryResolver {
 public:
  virtual ~QueryResolver() = default;
  virtual std::vector<std::string> lookup(const std::string& query, std::size_t k) const = 0;
};

// Inverted keyword index over page texts. Score is the sum over distinct
// query terms of idf * (1 + ln tf); ties break by url.
class DirectoryIndex final : public QueryResolver {
 public:
  void add_document(const std::string& url, std::string_view text);
  static DirectoryIndex from_web(const SimulatedWeb& web);

  std::vector<std::pair<std::string, double>> search(const std::string& query,
                                                     std::size_t k) const;
  std::vector<std::string> lookup(const std::string& query, std::size_t k) const override;
  std::size_t size() const { return doc_count_; }

 private:
  std::map<std::string, std::map<std::string, std::size_t>> postings_;  // term -> url -> tf
  std::size_t doc_count_ = 0;
};

// Live mode: fills "{query}" in each configured directory endpoint.
class TemplateResolver final : public QueryResolver {
 public:
  explicit TemplateResolver(std::vector<std::string> templates) : templates_(std::move(templates)) {}
  std::vector<std::string> lookup(const std::string& query, std::size_t k) const override;

 private:
  std::vector<std::string> templates_;
};

inline constexpr std::size_t kSeedsPerQuery = 3;

// Top-k urls per query, normalized, minus anything already fetched, deduplicated.
std::vector<std::string> resolve_queries(const std::vector<std::string>& queries,
                                         const QueryResolver& resolver,
                                         const std::set<std::string>& fetched,
                                         std::size_t k = kSeedsPerQuery);

// Tracks signal lifetime. A signal expires once `lifetime` iterations pass
// since it was created (or last produced new entities) without any yield.
class SignalLedger {
 public:
  explicit SignalLedger(int lifetime = 2) : lifetime_(lifetime) {}

  // Registers freshly detected signals and returns the ones still active.
  std::vector<GapSignal> update(const std::vector<GapSignal>& detected, int iteration);
  void record_urls(const GapSignal& signal, const std::vector<std::string>& urls);
  // Credits every signal that led to `url` with new entities at `iteration`.
  void credit(const std::string& url, int iteration);
  // Drops signals whose lifetime ran out as of the end of `iteration`.
  void expire(int iteration);

  // url -> strongest severity among active signals that produced it.
  std::map<std::string, double> active_url_severity() const;
  std::size_t active_count() const;
  std::size_t expired_count() const { return expired_.size(); }

 private:
  struct Entry {
    GapSignal signal;
    int last_productive = 0;
    std::set<std::string> urls;
  };
  int lifetime_;
  std::map<std::string, Entry> active_;
  std::set<std::string> expired_;
  std::map<std::string, std::set<std::string>> url_signals_;
};

}  // namespace wkw

#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "wkw/kg.hpp"

namespace wkw {

struct Anchor {
  std::string href;
  std::string text;
};

struct PageText {
  std::string url;
  std::string text;
  std::vector<Anchor> anchors;
  int fetch_iteration = 1;
};

struct Mention {
  std::string surface;
  EntityType type = EntityType::Company;
  double confidence = 1.0;
  friend bool operator==(const Mention&, const Mention&) = default;
};

struct Triple {
  std::string source;
  RelationType relation = RelationType::SuppliesTo;
  std::string target;
  double confidence = 1.0;
  friend bool operator==(const Triple&, const Triple&) = default;
};

struct ExtractionResult {
  std::vector<Mention> mentions;
  std::vector<Triple> triples;

  bool empty() const { return mentions.empty() && triples.empty(); }
  // Type of the mention whose normalized surface matches, if any.
  std::optional<EntityType> mention_type(std::string_view surface) const;
  friend bool operator==(const ExtractionResult&, const ExtractionResult&) = default;
};

// Every triple endpoint appears among the mentions and all confidences lie in [0,1].
bool satisfies_endpoint_closure(const ExtractionResult& r);

std::string result_to_json(const ExtractionResult& r);
// Throws ParseError on malformed input or an out-of-schema type.
ExtractionResult result_from_json(std::string_view text);

inline constexpr double kMarkerDefaultConfidence = 0.8;
inline constexpr double kPatternDefaultConfidence = 0.7;

enum class ExtractorKind { FixtureRules, ExternalLlmStub };

struct ExtractorConfig {
  ExtractorKind kind = ExtractorKind::FixtureRules;
  std::chrono::seconds cache_ttl = std::chrono::hours(24 * 30);
  // Recorded-response file consumed by ExternalLlmStub.
  std::string recorded_responses;
};

// One call per page, mirroring the single-request extraction contract.
class Extractor {
 public:
  virtual ~Extractor() = default;
  virtual ExtractionResult extract(const PageText& page) const = 0;
};

// Marker blocks `[[TYPE: name]]` / `[[rel: src -> dst :: conf]]` plus five
// unmarked sentence patterns ("X is located in Y", "X manufactures Y",
// "X supplies Y", "X partners with Y", "X operates in the Y sector").
class FixtureRuleExtractor final : public Extractor {
 public:
  ExtractionResult extract(const PageText& page) const override;
};

// Replays pre-recorded responses keyed by url + content hash. A miss throws
// ExtractorUnavailable; there is no live model client.
class RecordedResponseExtractor final : public Extractor {
 public:
  explicit RecordedResponseExtractor(std::map<std::string, ExtractionResult> responses);
  static RecordedResponseExtractor from_file(const std::string& path);

  ExtractionResult extract(const PageText& page) const override;
  std::size_t size() const { return responses_.size(); }

 private:
  std::map<std::string, ExtractionResult> responses_;
};

std::unique_ptr<Extractor> make_extractor(const ExtractorConfig& config);

// url + '#' + content hash of the text.
std::string cache_key(const PageText& page);

using Clock = std::function<std::chrono::system_clock::time_point()>;

// TTL cache of extraction results. Readers share; writers serialize.
// Entries are held as serialized JSON so a damaged entry is detected on read
// and recomputed.
class ExtractionCache {
 public:
  explicit ExtractionCache(std::chrono::seconds ttl, Clock clock = nullptr);

  std::optional<ExtractionResult> get(const std::string& key) const;
  void put(const std::string& key, const ExtractionResult& result);
  // Test hook: store raw bytes under a key.
  void put_raw(const std::string& key, std::string payload);

  void load(const std::string& path);
  void save(const std::string& path) const;
  std::size_t size() const;

 private:
  struct Entry {
    std::string payload;
    std::chrono::system_clock::time_point stored_at;
  };

  std::chrono::system_clock::time_point now() const;

  std::chrono::seconds ttl_;
  Clock clock_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, Entry> entries_;
};

// Extractor front-end that consults the cache before doing any work.
class CachedExtractor {
 public:
  CachedExtractor(const Extractor& inner, ExtractionCache& cache);

  ExtractionResult extract(const PageText& page);
  std::size_t invocations() const { return invocations_.load(); }

 private:
  const Extractor& inner_;
  ExtractionCache& cache_;
  std::atomic<std::size_t> invocations_{0};
};

}  // namespace wkw

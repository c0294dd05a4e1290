#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wkw/extraction.hpp"
#include "wkw/fetch.hpp"
#include "wkw/kg.hpp"

namespace wkw {

enum class CrawlStrategy { Bfs, Focused, WkSinglePass, Wkw };

std::string_view to_string(CrawlStrategy s);
std::optional<CrawlStrategy> parse_strategy(std::string_view s);

enum class Origin { Seed, Outlink, GapQuery };
std::string_view to_string(Origin o);

// Seed categories, in the order the focused baseline visits them.
enum class SourceType { Directory, Registry, Company, News, Unknown };
std::string_view to_string(SourceType s);
SourceType parse_source_type(std::string_view s);

struct Seed {
  std::string url;
  SourceType source_type = SourceType::Unknown;
};

// Line-delimited {"url":..., "source_type":...}.
std::vector<Seed> parse_seeds(std::istream& in);
std::vector<Seed> load_seeds(const std::string& path);

struct PriorityWeights {
  double alpha = 1.0 / 3.0;  // relevance
  double beta = 1.0 / 3.0;   // novelty
  double gamma = 1.0 / 3.0;  // gap score
  // Throws ConfigError unless all weights are non-negative and sum to 1.
  void validate() const;
};

struct FrontierItem {
  std::string url;
  double relevance = 0.0;
  double novelty = 0.0;
  double gap_score = 0.0;
  double priority = 0.0;
  Origin origin = Origin::Seed;
  int discovered_iteration = 1;
  std::string anchor_text;
  SourceType source_type = SourceType::Unknown;
  double parent_yield = 0.0;  // entities extracted from the linking page
  std::uint64_t sequence = 0;  // insertion order
};

// Everything the priority function looks at besides the url itself.
struct PriorityContext {
  std::vector<std::string> lexicon;       // lowercase terms
  std::set<std::string> seen_domains;     // registered domains already fetched
  std::set<std::string> alias_tokens;     // tokens of every known entity alias
  std::map<std::string, double> gap_severity;  // url -> strongest originating signal

  // Lexicon = sector and product names of the graph plus the seed keywords.
  static PriorityContext from_graph(const KnowledgeGraph& graph,
                                    const std::vector<std::string>& seed_keywords);
};

// Share of lexicon terms found (as whole words) in the url and anchor text.
double relevance_score(std::string_view url, std::string_view anchor,
                       const std::vector<std::string>& lexicon);
// 1 for an unseen domain, else the share of anchor tokens matching no alias.
double novelty_score(std::string_view url, std::string_view anchor, const PriorityContext& ctx);

// priority = alpha*relevance + beta*novelty + gamma*gap_score
FrontierItem compute_priority(std::string url, std::string anchor, Origin origin,
                              const PriorityContext& ctx, const PriorityWeights& weights);

// Deduplicating url frontier. Order::Fifo pops by insertion; Order::Priority
// pops by descending priority then url; Order::Yield pops seeds by source
// type, then outlinks by descending parent yield, ties by url.
class Frontier {
 public:
  enum class Order { Fifo, Priority, Yield };

  explicit Frontier(Order order = Order::Fifo) : order_(order) {}

  // False when the url was queued or fetched before.
  bool push(FrontierItem item);
  std::optional<FrontierItem> pop();
  // Raises a queued item's gap association; false if the url is not queued.
  bool attach_gap(const std::string& url, double severity);

  void mark_fetched(const std::string& url) { known_.insert(url); }
  bool known(const std::string& url) const { return known_.count(url) != 0; }

  void set_order(Order order);
  Order order() const { return order_; }
  // Recomputes every queued item in place and re-keys the queue.
  void rescore(const std::function<void(FrontierItem&)>& update);

  std::size_t size() const { return queue_.size(); }
  bool empty() const { return queue_.empty(); }
  // Queued items in pop order.
  std::vector<FrontierItem> items() const;

 private:
  struct Key {
    int tier = 0;
    double score = 0.0;
    std::uint64_t sequence = 0;
    std::string url;
    friend auto operator<=>(const Key&, const Key&) = default;
  };
  Key key_for(const FrontierItem& item) const;

  Order order_;
  std::map<Key, FrontierItem> queue_;
  std::map<std::string, Key> queued_;
  std::set<std::string> known_;
  std::uint64_t next_sequence_ = 0;
};

struct CrawlBudget {
  std::size_t max_pages = 213;
  std::size_t pages_used = 0;
  std::chrono::milliseconds per_domain_delay{1500};
  std::size_t max_concurrency = 10;
  bool count_cache_hits = false;

  std::size_t remaining() const { return max_pages > pages_used ? max_pages - pages_used : 0; }
  bool exhausted() const { return remaining() == 0; }
};

struct FetchLogEntry {
  std::string url;
  FetchStatus status = FetchStatus::Ok;
  int http_code = 0;
  int iteration = 0;
};

struct CrawlIterationResult {
  std::vector<PageText> pages;
  std::vector<FetchLogEntry> log;
  std::size_t pages_charged = 0;
};

// Called for every fetched page; returns its entity yield, which drives the
// focused strategy's outlink ordering.
using PageObserver = std::function<double(const PageText&)>;

class Crawler {
 public:
  Crawler(CrawlStrategy strategy, PriorityWeights weights, CrawlBudget budget);

  void add_seeds(const std::vector<Seed>& seeds, int iteration);
  // Queues (or re-tags) a url produced by a gap query. The query stands in
  // for anchor text when scoring. False if already fetched.
  bool add_gap_url(const std::string& url, double severity, int iteration,
                   const std::string& query = {});

  // Installs the context used for scoring during the next iteration and
  // picks the frontier order. The full-loop strategy crawls its first
  // iteration in FIFO order, since no graph exists yet to guide it.
  void begin_iteration(int iteration, PriorityContext context);

  // Fetches until page_cap pages are charged, the budget runs out, or the
  // frontier empties. Fetch failures are logged, never thrown.
  CrawlIterationResult run_iteration(Fetcher& fetcher, std::size_t page_cap,
                                     const PageObserver& observer = {});

  const Frontier& frontier() const { return frontier_; }
  const CrawlBudget& budget() const { return budget_; }
  const std::set<std::string>& fetched() const { return fetched_; }
  const std::set<std::string>& seen_domains() const { return context_.seen_domains; }
  CrawlStrategy strategy() const { return strategy_; }

 private:
  void enqueue_outlinks(const PageText& page, double yield);

  CrawlStrategy strategy_;
  PriorityWeights weights_;
  CrawlBudget budget_;
  Frontier frontier_;
  PriorityContext context_;
  std::set<std::string> fetched_;
  int iteration_ = 1;
};

}  // namespace wkw

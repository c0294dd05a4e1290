#include "wkw/crawler.hpp"

#include <algorithm>
#include <fstream>
#include <future>

#include <json.hpp>

#include "wkw/error.hpp"
#include "wkw/text.hpp"
#include "wkw/url.hpp"

namespace wkw {

std::string_view to_string(CrawlStrategy s) {
  switch (s) {
    case CrawlStrategy::Bfs: return "bfs";
    case CrawlStrategy::Focused: return "focused";
    case CrawlStrategy::WkSinglePass: return "wk_single_pass";
    case CrawlStrategy::Wkw: return "wkw";
  }
  return "unknown";
}

std::optional<CrawlStrategy> parse_strategy(std::string_view s) {
  std::string low = to_lower(s);
  if (low == "bfs") return CrawlStrategy::Bfs;
  if (low == "focused") return CrawlStrategy::Focused;
  if (low == "wk_single_pass" || low == "wk" || low == "single_pass") return CrawlStrategy::WkSinglePass;
  if (low == "wkw") return CrawlStrategy::Wkw;
  return std::nullopt;
}

std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::Seed: return "seed";
    case Origin::Outlink: return "outlink";
    case Origin::GapQuery: return "gap_query";
  }
  return "unknown";
}

std::string_view to_string(SourceType s) {
  switch (s) {
    case SourceType::Directory: return "directory";
    case SourceType::Registry: return "registry";
    case SourceType::Company: return "company";
    case SourceType::News: return "news";
    case SourceType::Unknown: return "unknown";
  }
  return "unknown";
}

SourceType parse_source_type(std::string_view s) {
  std::string low = to_lower(s);
  if (low == "directory") return SourceType::Directory;
  if (low == "registry") return SourceType::Registry;
  if (low == "company") return SourceType::Company;
  if (low == "news") return SourceType::News;
  return SourceType::Unknown;
}

std::vector<Seed> parse_seeds(std::istream& in) {
  std::vector<Seed> seeds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      auto url = normalize_url(j.at("url").get<std::string>());
      if (!url) throw ParseError("seed url is not an absolute http(s) url", line_no);
      seeds.push_back({*url, parse_source_type(j.value("source_type", std::string{}))});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad seed record: ") + e.what(), line_no);
    }
  }
  return seeds;
}

std::vector<Seed> load_seeds(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read seed file " + path);
  return parse_seeds(in);
}

void PriorityWeights::validate() const {
  if (alpha < 0 || beta < 0 || gamma < 0)
    throw ConfigError("priority weights must be non-negative");
  if (std::abs(alpha + beta + gamma - 1.0) > 1e-9)
    throw ConfigError("priority weights must sum to 1");
}

namespace {

std::string joined_tokens(std::string_view a, std::string_view b = {}) {
  std::string out = " ";
  for (const auto& t : tokenize(a)) out += t + " ";
  for (const auto& t : tokenize(b)) out += t + " ";
  return out;
}

}  // namespace

PriorityContext PriorityContext::from_graph(const KnowledgeGraph& graph,
                                            const std::vector<std::string>& seed_keywords) {
  PriorityContext ctx;
  std::set<std::string> terms;
  auto add_term = [&](std::string_view t) {
    std::string joined = trim(joined_tokens(t));
    if (!joined.empty()) terms.insert(joined);
  };
  for (const auto& k : seed_keywords) add_term(k);
  for (const auto& [id, e] : graph.entities()) {
    if (e.type == EntityType::Sector || e.type == EntityType::Product) add_term(e.canonical_name);
    for (const auto& alias : e.aliases)
      for (auto& tok : tokenize(alias)) ctx.alias_tokens.insert(std::move(tok));
  }
  ctx.lexicon.assign(terms.begin(), terms.end());
  return ctx;
}

double relevance_score(std::string_view url, std::string_view anchor,
                       const std::vector<std::string>& lexicon) {
  if (lexicon.empty()) return 0.0;
  const std::string hay = joined_tokens(url, anchor);
  std::size_t hits = 0;
  for (const auto& term : lexicon)
    if (hay.find(" " + term + " ") != std::string::npos) ++hits;
  return std::min(1.0, static_cast<double>(hits) / static_cast<double>(lexicon.size()));
}

double novelty_score(std::string_view url, std::string_view anchor, const PriorityContext& ctx) {
  if (!ctx.seen_domains.count(registered_domain(url))) return 1.0;
  auto tokens = tokenize(anchor);
  if (tokens.empty()) return 0.0;
  auto fresh = std::count_if(tokens.begin(), tokens.end(),
                             [&](const std::string& t) { return !ctx.alias_tokens.count(t); });
  return static_cast<double>(fresh) / static_cast<double>(tokens.size());
}

FrontierItem compute_priority(std::string url, std::string anchor, Origin origin,
                              const PriorityContext& ctx, const PriorityWeights& weights) {
  FrontierItem item;
  item.relevance = relevance_score(url, anchor, ctx.lexicon);
  item.novelty = novelty_score(url, anchor, ctx);
  if (origin == Origin::GapQuery) {
    auto it = ctx.gap_severity.find(url);
    item.gap_score = it == ctx.gap_severity.end() ? 0.0 : std::clamp(it->second, 0.0, 1.0);
  }
  item.priority = weights.alpha * item.relevance + weights.beta * item.novelty +
                  weights.gamma * item.gap_score;
  item.url = std::move(url);
  item.anchor_text = std::move(anchor);
  item.origin = origin;
  return item;
}

Frontier::Key Frontier::key_for(const FrontierItem& item) const {
  switch (order_) {
    case Order::Fifo:
      return {0, 0.0, item.sequence, {}};
    case Order::Priority:
      return {0, -item.priority, 0, item.url};
    case Order::Yield:
      if (item.origin == Origin::Seed) return {static_cast<int>(item.source_type), 0.0, 0, item.url};
      return {10, -item.parent_yield, 0, item.url};
  }
  return {};
}

bool Frontier::push(FrontierItem item) {
  if (!known_.insert(item.url).second) return false;
  item.sequence = next_sequence_++;
  Key key = key_for(item);
  queued_[item.url] = key;
  queue_.emplace(std::move(key), std::move(item));
  return true;
}

std::optional<FrontierItem> Frontier::pop() {
  if (queue_.empty()) return std::nullopt;
  auto node = queue_.extract(queue_.begin());
  queued_.erase(node.mapped().url);
  return std::move(node.mapped());
}

bool Frontier::attach_gap(const std::string& url, double severity) {
  auto it = queued_.find(url);
  if (it == queued_.end()) return false;
  auto node = queue_.extract(it->second);
  FrontierItem& item = node.mapped();
  item.origin = Origin::GapQuery;
  item.gap_score = std::max(item.gap_score, std::clamp(severity, 0.0, 1.0));
  node.key() = key_for(item);
  it->second = node.key();
  queue_.insert(std::move(node));
  return true;
}

void Frontier::set_order(Order order) {
  if (order == order_) return;
  order_ = order;
  rescore([](FrontierItem&) {});
}

void Frontier::rescore(const std::function<void(FrontierItem&)>& update) {
  std::map<Key, FrontierItem> rebuilt;
  for (auto& [key, item] : queue_) {
    update(item);
    Key k = key_for(item);
    queued_[item.url] = k;
    rebuilt.emplace(std::move(k), std::move(item));
  }
  queue_ = std::move(rebuilt);
}

std::vector<FrontierItem> Frontier::items() const {
  std::vector<FrontierItem> out;
  out.reserve(queue_.size());
  for (const auto& [key, item] : queue_) out.push_back(item);
  return out;
}

Crawler::Crawler(CrawlStrategy strategy, PriorityWeights weights, CrawlBudget budget)
    : strategy_(strategy),
      weights_(weights),
      budget_(budget),
      frontier_(strategy == CrawlStrategy::Focused ? Frontier::Order::Yield
                                                   : Frontier::Order::Fifo) {
  weights_.validate();
}

void Crawler::add_seeds(const std::vector<Seed>& seeds, int iteration) {
  for (const Seed& seed : seeds) {
    auto url = normalize_url(seed.url);
    if (!url) continue;
    FrontierItem item = compute_priority(*url, "", Origin::Seed, context_, weights_);
    item.source_type = seed.source_type;
    item.discovered_iteration = iteration;
    frontier_.push(std::move(item));
  }
}

bool Crawler::add_gap_url(const std::string& raw_url, double severity, int iteration,
                          const std::string& query) {
  auto url = normalize_url(raw_url);
  if (!url || fetched_.count(*url)) return false;
  double& sev = context_.gap_severity[*url];
  sev = std::max(sev, severity);
  if (frontier_.attach_gap(*url, sev)) return true;
  FrontierItem item = compute_priority(*url, query, Origin::GapQuery, context_, weights_);
  item.discovered_iteration = iteration;
  return frontier_.push(std::move(item));
}

void Crawler::begin_iteration(int iteration, PriorityContext context) {
  iteration_ = iteration;
  // Domains accumulate; gap severities are replaced so expired signals stop counting.
  context.seen_domains.insert(context_.seen_domains.begin(), context_.seen_domains.end());
  context_ = std::move(context);
  if (strategy_ == CrawlStrategy::Wkw && iteration >= 2) {
    frontier_.set_order(Frontier::Order::Priority);
    frontier_.rescore([&](FrontierItem& item) {
      FrontierItem fresh =
          compute_priority(item.url, item.anchor_text, item.origin, context_, weights_);
      item.relevance = fresh.relevance;
      item.novelty = fresh.novelty;
      item.gap_score = fresh.gap_score;
      item.priority = fresh.priority;
    });
  }
}

void Crawler::enqueue_outlinks(const PageText& page, double yield) {
  for (const Anchor& a : page.anchors) {
    auto url = resolve_url(page.url, a.href);
    if (!url || frontier_.known(*url)) continue;
    FrontierItem item = compute_priority(*url, a.text, Origin::Outlink, context_, weights_);
    item.discovered_iteration = iteration_;
    item.parent_yield = yield;
    frontier_.push(std::move(item));
  }
}

CrawlIterationResult Crawler::run_iteration(Fetcher& fetcher, std::size_t page_cap,
                                            const PageObserver& observer) {
  CrawlIterationResult result;
  while (result.pages_charged < page_cap && !budget_.exhausted() && !frontier_.empty()) {
    const std::size_t slots = std::min(page_cap - result.pages_charged, budget_.remaining());
    const std::size_t width =
        fetcher.concurrent() ? std::max<std::size_t>(1, std::min(budget_.max_concurrency, slots)) : 1;
    std::vector<FrontierItem> batch;
    while (batch.size() < width && !frontier_.empty()) batch.push_back(*frontier_.pop());

    std::vector<FetchOutcome> outcomes(batch.size());
    if (batch.size() == 1) {
      outcomes[0] = fetcher.fetch(batch[0].url);
    } else {
      std::vector<std::future<FetchOutcome>> inflight;
      for (const auto& item : batch)
        inflight.push_back(std::async(std::launch::async, [&fetcher, url = item.url] {
          return fetcher.fetch(url);
        }));
      for (std::size_t i = 0; i < batch.size(); ++i) outcomes[i] = inflight[i].get();
    }

    for (std::size_t i = 0; i < batch.size(); ++i) {
      FetchOutcome& o = outcomes[i];
      fetched_.insert(batch[i].url);
      frontier_.mark_fetched(o.url);
      result.log.push_back({batch[i].url, o.status, o.http_code, iteration_});
      if (o.charges_budget(budget_.count_cache_hits)) {
        ++budget_.pages_used;
        ++result.pages_charged;
      }
      if (!o.page) continue;
      PageText page = std::move(*o.page);
      page.fetch_iteration = iteration_;
      context_.seen_domains.insert(registered_domain(page.url));
      double yield = observer ? observer(page) : 0.0;
      enqueue_outlinks(page, yield);
      result.pages.push_back(std::move(page));
    }
  }
  return result;
}

}  // namespace wkw

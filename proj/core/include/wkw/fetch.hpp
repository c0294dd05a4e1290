#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "wkw/extraction.hpp"
#include "wkw/robots.hpp"

namespace wkw {

enum class FetchStatus { Ok, RobotsDenied, HttpError, Timeout, Cached };

std::string_view to_string(FetchStatus s);

struct FetchOutcome {
  std::string url;
  FetchStatus status = FetchStatus::HttpError;
  int http_code = 0;
  std::optional<PageText> page;  // set for Ok and Cached

  bool has_page() const { return page.has_value(); }
  // Whether an HTTP request was spent on the page itself.
  bool charges_budget(bool count_cache_hits) const;

  static FetchOutcome ok(PageText page);
  static FetchOutcome cached(PageText page);
  static FetchOutcome robots_denied(std::string url);
  static FetchOutcome http_error(std::string url, int code);
  static FetchOutcome timeout(std::string url);
};

class Fetcher {
 public:
  virtual ~Fetcher() = default;
  virtual FetchOutcome fetch(const std::string& url) = 0;
  // True when fetch() may be called concurrently from several threads.
  virtual bool concurrent() const { return false; }
};

// Start times of every request, per domain. The simulated backend uses a
// virtual clock so the delay contract can be checked without sleeping.
class PolitenessRecorder {
 public:
  struct Event {
    std::string url;
    std::string domain;
    double start_seconds = 0.0;
  };

  explicit PolitenessRecorder(std::chrono::milliseconds delay) : delay_(delay) {}

  // Schedules a request on the virtual clock and returns its start time.
  double schedule(const std::string& url, const std::string& domain);
  void record(const std::string& url, const std::string& domain, double start_seconds);

  std::vector<Event> events() const;
  // Every pair of consecutive same-domain starts is at least `delay` apart.
  bool verify() const;
  std::chrono::milliseconds delay() const { return delay_; }

 private:
  std::chrono::milliseconds delay_;
  mutable std::mutex mutex_;
  std::vector<Event> events_;
  std::map<std::string, double> next_slot_;
};

struct SimulatedPage {
  std::string url;
  std::string text;
  std::vector<Anchor> links;
};

// In-memory web graph loaded from {"pages":[{"url","text","links":[...]}]}.
// A link is either a url string or {"href","text"}.
class SimulatedWeb {
 public:
  SimulatedWeb() = default;
  explicit SimulatedWeb(std::vector<SimulatedPage> pages);

  static SimulatedWeb from_json(std::string_view json_text);
  static SimulatedWeb load(const std::string& path);
  std::string to_json() const;

  const SimulatedPage* page(const std::string& url) const;
  const std::map<std::string, SimulatedPage>& pages() const { return pages_; }
  std::size_t size() const { return pages_.size(); }

 private:
  std::map<std::string, SimulatedPage> pages_;
};

// Resolves urls against a SimulatedWeb. robots.txt files are ordinary pages
// at "<scheme>://<host>/robots.txt" and are consulted before each fetch.
class SimulatedFetcher final : public Fetcher {
 public:
  SimulatedFetcher(const SimulatedWeb& web, std::chrono::milliseconds per_domain_delay);

  // Thread-safe, but reports non-concurrent: an in-memory lookup gains
  // nothing from threads and sequential fetching keeps runs reproducible.
  FetchOutcome fetch(const std::string& url) override;

  const PolitenessRecorder& recorder() const { return recorder_; }
  std::size_t requests() const;

 private:
  const RobotsRules& robots_for(const std::string& url);

  const SimulatedWeb& web_;
  PolitenessRecorder recorder_;
  mutable std::mutex mutex_;
  std::map<std::string, RobotsRules> robots_;
  std::size_t requests_ = 0;
};

// Disk cache of fetched pages, one JSON file per url.
class PageCache {
 public:
  PageCache(std::string directory, std::chrono::seconds ttl, Clock clock = nullptr);

  std::optional<PageText> get(const std::string& url) const;
  void put(const PageText& page);

 private:
  std::string path_for(const std::string& url) const;
  std::chrono::system_clock::time_point now() const;

  std::string dir_;
  std::chrono::seconds ttl_;
  Clock clock_;
};

inline constexpr std::chrono::hours kPageCacheTtl{24 * 7};

// Consults a PageCache before delegating; fresh pages are stored.
class CachingFetcher final : public Fetcher {
 public:
  CachingFetcher(Fetcher& inner, PageCache& cache) : inner_(inner), cache_(cache) {}
  FetchOutcome fetch(const std::string& url) override;
  bool concurrent() const override { return inner_.concurrent(); }

 private:
  Fetcher& inner_;
  PageCache& cache_;
};

struct HttpFetcherOptions {
  std::chrono::milliseconds per_domain_delay{1500};
  std::chrono::seconds timeout{10};
  std::string user_agent = "wkw-crawler/0.1";
};

// Live HTTP(S) backend. robots.txt is fetched once per host; requests to the
// same host are serialized with the configured delay between starts.
class HttpFetcher final : public Fetcher {
 public:
  explicit HttpFetcher(HttpFetcherOptions options = {});
  ~HttpFetcher() override;

  FetchOutcome fetch(const std::string& url) override;
  bool concurrent() const override { return true; }

  const PolitenessRecorder& recorder() const { return recorder_; }

 private:
  struct HostState;
  HostState& host_state(const std::string& origin);

  HttpFetcherOptions options_;
  PolitenessRecorder recorder_;
  std::chrono::steady_clock::time_point epoch_;
  std::mutex mutex_;
  std::map<std::string, std::unique_ptr<HostState>> hosts_;
};

// Visible text and anchors of an HTML document. Script/style content is dropped.
PageText html_to_page(const std::string& url, std::string_view html);

}  // namespace wkw

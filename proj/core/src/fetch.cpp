#include "wkw/fetch.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wkw/error.hpp"
#include "wkw/text.hpp"
#include "wkw/url.hpp"

namespace wkw {

using nlohmann::json;

std::string_view to_string(FetchStatus s) {
  switch (s) {
    case FetchStatus::Ok: return "ok";
    case FetchStatus::RobotsDenied: return "robots_denied";
    case FetchStatus::HttpError: return "http_error";
    case FetchStatus::Timeout: return "timeout";
    case FetchStatus::Cached: return "cached";
  }
  return "unknown";
}

bool FetchOutcome::charges_budget(bool count_cache_hits) const {
  switch (status) {
    case FetchStatus::RobotsDenied: return false;
    case FetchStatus::Cached: return count_cache_hits;
    default: return true;
  }
}

FetchOutcome FetchOutcome::ok(PageText page) {
  FetchOutcome o;
  o.url = page.url;
  o.status = FetchStatus::Ok;
  o.http_code = 200;
  o.page = std::move(page);
  return o;
}

FetchOutcome FetchOutcome::cached(PageText page) {
  FetchOutcome o = ok(std::move(page));
  o.status = FetchStatus::Cached;
  return o;
}

FetchOutcome FetchOutcome::robots_denied(std::string url) {
  FetchOutcome o;
  o.url = std::move(url);
  o.status = FetchStatus::RobotsDenied;
  return o;
}

FetchOutcome FetchOutcome::http_error(std::string url, int code) {
  FetchOutcome o;
  o.url = std::move(url);
  o.status = FetchStatus::HttpError;
  o.http_code = code;
  return o;
}

FetchOutcome FetchOutcome::timeout(std::string url) {
  FetchOutcome o;
  o.url = std::move(url);
  o.status = FetchStatus::Timeout;
  return o;
}

double PolitenessRecorder::schedule(const std::string& url, const std::string& domain) {
  std::lock_guard lock(mutex_);
  double& slot = next_slot_[domain];
  double start = slot;
  slot = start + std::chrono::duration<double>(delay_).count();
  events_.push_back({url, domain, start});
  return start;
}

void PolitenessRecorder::record(const std::string& url, const std::string& domain,
                                double start_seconds) {
  std::lock_guard lock(mutex_);
  events_.push_back({url, domain, start_seconds});
}

std::vector<PolitenessRecorder::Event> PolitenessRecorder::events() const {
  std::lock_guard lock(mutex_);
  return events_;
}

bool PolitenessRecorder::verify() const {
  const double min_gap = std::chrono::duration<double>(delay_).count() - 1e-6;
  std::map<std::string, std::vector<double>> starts;
  for (const Event& e : events()) starts[e.domain].push_back(e.start_seconds);
  for (auto& [domain, times] : starts) {
    std::sort(times.begin(), times.end());
    for (std::size_t i = 1; i < times.size(); ++i)
      if (times[i] - times[i - 1] < min_gap) return false;
  }
  return true;
}

SimulatedWeb::SimulatedWeb(std::vector<SimulatedPage> pages) {
  for (auto& p : pages) {
    std::string key = normalize_url(p.url).value_or(p.url);
    p.url = key;
    pages_[key] = std::move(p);
  }
}

SimulatedWeb SimulatedWeb::from_json(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("simulated web: ") + e.what());
  }
  std::vector<SimulatedPage> pages;
  try {
    for (const json& p : j.at("pages")) {
      SimulatedPage page;
      page.url = p.at("url").get<std::string>();
      page.text = p.value("text", std::string{});
      for (const json& l : p.value("links", json::array())) {
        if (l.is_string()) page.links.push_back({l.get<std::string>(), ""});
        else page.links.push_back({l.at("href").get<std::string>(), l.value("text", std::string{})});
      }
      pages.push_back(std::move(page));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("simulated web: ") + e.what());
  }
  return SimulatedWeb(std::move(pages));
}

SimulatedWeb SimulatedWeb::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read simulated web " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::string SimulatedWeb::to_json() const {
  json pages = json::array();
  for (const auto& [url, p] : pages_) {
    json links = json::array();
    for (const Anchor& a : p.links) links.push_back({{"href", a.href}, {"text", a.text}});
    pages.push_back({{"url", p.url}, {"text", p.text}, {"links", std::move(links)}});
  }
  return json{{"pages", std::move(pages)}}.dump(1);
}

const SimulatedPage* SimulatedWeb::page(const std::string& url) const {
  auto key = normalize_url(url);
  if (!key) return nullptr;
  auto it = pages_.find(*key);
  return it == pages_.end() ? nullptr : &it->second;
}

SimulatedFetcher::SimulatedFetcher(const SimulatedWeb& web,
                                   std::chrono::milliseconds per_domain_delay)
    : web_(web), recorder_(per_domain_delay) {}

const RobotsRules& SimulatedFetcher::robots_for(const std::string& url) {
  auto parsed = parse_url(url);
  std::string origin = parsed ? parsed->scheme + "://" + parsed->host +
                                    (parsed->port ? ":" + std::to_string(parsed->port) : "")
                              : url;
  auto it = robots_.find(origin);
  if (it != robots_.end()) return it->second;
  const SimulatedPage* robots = web_.page(origin + "/robots.txt");
  return robots_.emplace(origin, robots ? RobotsRules::parse(robots->text) : RobotsRules::allow_all())
      .first->second;
}

FetchOutcome SimulatedFetcher::fetch(const std::string& raw_url) {
  auto url = normalize_url(raw_url);
  if (!url) return FetchOutcome::http_error(raw_url, 400);
  {
    std::lock_guard lock(mutex_);
    if (!robots_for(*url).allowed(url_path_and_query(*url)))
      return FetchOutcome::robots_denied(*url);
    ++requests_;
  }
  recorder_.schedule(*url, url_host(*url));
  const SimulatedPage* page = web_.page(*url);
  if (!page) return FetchOutcome::http_error(*url, 404);
  return FetchOutcome::ok(PageText{page->url, page->text, page->links, 0});
}

std::size_t SimulatedFetcher::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

PageCache::PageCache(std::string directory, std::chrono::seconds ttl, Clock clock)
    : dir_(std::move(directory)), ttl_(ttl), clock_(std::move(clock)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create page cache " + dir_ + ": " + ec.message());
}

std::chrono::system_clock::time_point PageCache::now() const {
  return clock_ ? clock_() : std::chrono::system_clock::now();
}

std::string PageCache::path_for(const std::string& url) const {
  return (std::filesystem::path(dir_) / (content_hash(url) + ".json")).string();
}

std::optional<PageText> PageCache::get(const std::string& url) const {
  std::ifstream in(path_for(url));
  if (!in) return std::nullopt;
  try {
    json j = json::parse(in);
    if (j.at("url").get<std::string>() != url) return std::nullopt;
    auto stored = std::chrono::system_clock::time_point(
        std::chrono::seconds(j.at("stored_at").get<long long>()));
    if (now() - stored >= ttl_) return std::nullopt;
    PageText page{url, j.at("text").get<std::string>(), {}, 0};
    for (const json& a : j.at("anchors"))
      page.anchors.push_back({a.at(0).get<std::string>(), a.at(1).get<std::string>()});
    return page;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

void PageCache::put(const PageText& page) {
  json anchors = json::array();
  for (const Anchor& a : page.anchors) anchors.push_back({a.href, a.text});
  auto secs =
      std::chrono::duration_cast<std::chrono::seconds>(now().time_since_epoch()).count();
  std::ofstream out(path_for(page.url));
  if (!out) throw IoError("cannot write page cache entry for " + page.url);
  out << json{{"url", page.url}, {"text", page.text}, {"anchors", anchors}, {"stored_at", secs}};
}

FetchOutcome CachingFetcher::fetch(const std::string& url) {
  std::string key = normalize_url(url).value_or(url);
  if (auto hit = cache_.get(key)) return FetchOutcome::cached(std::move(*hit));
  FetchOutcome o = inner_.fetch(key);
  if (o.status == FetchStatus::Ok && o.page) cache_.put(*o.page);
  return o;
}

}  // namespace wkw

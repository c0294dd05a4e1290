#include <cctype>
#include <thread>

#include <httplib.h>

#include "wkw/fetch.hpp"
#include "wkw/text.hpp"
#include "wkw/url.hpp"

namespace wkw {

struct HttpFetcher::HostState {
  std::mutex gate;
  bool robots_loaded = false;
  RobotsRules robots;
  std::chrono::steady_clock::time_point next_allowed{};
};

namespace {

std::string decode_entities(std::string_view s) {
  static const std::pair<std::string_view, char> kEntities[] = {
      {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&#39;", '\''}, {"&nbsp;", ' '}};
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    bool replaced = false;
    if (s[i] == '&') {
      for (auto [name, ch] : kEntities) {
        if (s.substr(i, name.size()) == name) {
          out.push_back(ch);
          i += name.size() - 1;
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out.push_back(s[i]);
  }
  return out;
}

std::string attribute(std::string_view tag, std::string_view name) {
  std::string lower = to_lower(tag);
  std::size_t at = 0;
  while ((at = lower.find(name, at)) != std::string::npos) {
    std::size_t p = at + name.size();
    bool word_start = at == 0 || std::isspace(static_cast<unsigned char>(lower[at - 1]));
    while (p < lower.size() && std::isspace(static_cast<unsigned char>(lower[p]))) ++p;
    if (!word_start || p >= lower.size() || lower[p] != '=') {
      at += name.size();
      continue;
    }
    ++p;
    while (p < lower.size() && std::isspace(static_cast<unsigned char>(lower[p]))) ++p;
    if (p >= lower.size()) return {};
    char quote = tag[p];
    if (quote == '"' || quote == '\'') {
      auto end = tag.find(quote, p + 1);
      return decode_entities(tag.substr(p + 1, end == std::string_view::npos ? end : end - p - 1));
    }
    auto end = tag.find_first_of(" \t\n>", p);
    return decode_entities(tag.substr(p, end == std::string_view::npos ? end : end - p));
  }
  return {};
}

bool is_block_tag(std::string_view name) {
  static constexpr std::string_view kBlocks[] = {"p",  "div", "br", "li", "tr", "h1", "h2",
                                                 "h3", "h4",  "h5", "h6", "ul", "ol", "table",
                                                 "section", "article", "header", "footer"};
  for (auto b : kBlocks)
    if (name == b) return true;
  return false;
}

}  // namespace

PageText html_to_page(const std::string& url, std::string_view html) {
  PageText page{url, {}, {}, 0};
  std::string text;
  std::optional<Anchor> open_anchor;
  std::size_t i = 0;
  while (i < html.size()) {
    if (html[i] != '<') {
      auto next = html.find('<', i);
      std::string chunk = decode_entities(html.substr(i, next == std::string_view::npos ? next : next - i));
      text += chunk;
      if (open_anchor) open_anchor->text += chunk;
      if (next == std::string_view::npos) break;
      i = next;
      continue;
    }
    if (html.substr(i, 4) == "<!--") {
      auto end = html.find("-->", i + 4);
      i = end == std::string_view::npos ? html.size() : end + 3;
      continue;
    }
    auto close = html.find('>', i);
    if (close == std::string_view::npos) break;
    std::string_view tag = html.substr(i + 1, close - i - 1);
    bool closing = !tag.empty() && tag.front() == '/';
    std::string name;
    for (std::size_t k = closing ? 1 : 0;
         k < tag.size() && !std::isspace(static_cast<unsigned char>(tag[k])) && tag[k] != '/'; ++k)
      name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(tag[k]))));
    i = close + 1;
    if (!closing && (name == "script" || name == "style")) {
      auto end = to_lower(html.substr(i)).find("</" + name);
      i = end == std::string::npos ? html.size() : i + end;
      continue;
    }
    if (name == "a") {
      if (closing) {
        if (open_anchor) {
          open_anchor->text = collapse_whitespace(open_anchor->text);
          page.anchors.push_back(std::move(*open_anchor));
          open_anchor.reset();
        }
      } else {
        std::string href = attribute(tag, "href");
        if (!href.empty()) open_anchor = Anchor{href, {}};
      }
    } else if (is_block_tag(name)) {
      text.push_back('\n');
    } else {
      text.push_back(' ');
    }
  }
  page.text = std::move(text);
  return page;
}

HttpFetcher::HttpFetcher(HttpFetcherOptions options)
    : options_(std::move(options)),
      recorder_(options_.per_domain_delay),
      epoch_(std::chrono::steady_clock::now()) {}

HttpFetcher::~HttpFetcher() = default;

HttpFetcher::HostState& HttpFetcher::host_state(const std::string& origin) {
  std::lock_guard lock(mutex_);
  auto& slot = hosts_[origin];
  if (!slot) slot = std::make_unique<HostState>();
  return *slot;
}

FetchOutcome HttpFetcher::fetch(const std::string& raw_url) {
  auto parsed = parse_url(raw_url);
  if (!parsed) return FetchOutcome::http_error(raw_url, 400);
  const std::string url = to_string(*parsed);
  const std::string origin =
      parsed->scheme + "://" + parsed->host + (parsed->port ? ":" + std::to_string(parsed->port) : "");
  HostState& host = host_state(origin);
  std::lock_guard gate(host.gate);

  httplib::Client client(origin);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);
  client.set_follow_location(true);
  client.set_default_headers({{"User-Agent", options_.user_agent}});

  auto polite_wait = [&](const std::string& target) {
    std::this_thread::sleep_until(host.next_allowed);
    auto start = std::chrono::steady_clock::now();
    host.next_allowed = start + options_.per_domain_delay;
    recorder_.record(target, parsed->host,
                     std::chrono::duration<double>(start - epoch_).count());
  };

  if (!host.robots_loaded) {
    polite_wait(origin + "/robots.txt");
    auto res = client.Get("/robots.txt");
    host.robots = (res && res->status == 200) ? RobotsRules::parse(res->body) : RobotsRules::allow_all();
    host.robots_loaded = true;
  }
  const std::string target = url_path_and_query(url);
  if (!host.robots.allowed(target)) return FetchOutcome::robots_denied(url);

  polite_wait(url);
  auto res = client.Get(target);
  if (!res) {
    if (res.error() == httplib::Error::Read || res.error() == httplib::Error::ConnectionTimeout)
      return FetchOutcome::timeout(url);
    return FetchOutcome::http_error(url, 0);
  }
  if (res->status != 200) return FetchOutcome::http_error(url, res->status);
  std::string type = to_lower(res->get_header_value("Content-Type"));
  if (type.find("html") != std::string::npos) return FetchOutcome::ok(html_to_page(url, res->body));
  return FetchOutcome::ok(PageText{url, res->body, {}, 0});
}

}  // namespace wkw

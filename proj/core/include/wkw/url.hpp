#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace wkw {

struct ParsedUrl {
  std::string scheme;  // lowercase
  std::string host;    // lowercase
  int port = 0;        // 0 when absent or default for the scheme
  std::string path;    // always begins with '/'
  std::string query;   // without '?'
};

// Absolute http(s) urls only; fragments are dropped.
std::optional<ParsedUrl> parse_url(std::string_view url);
std::string to_string(const ParsedUrl& url);

// Lowercase host, default port removed, dot segments resolved, fragment stripped.
std::optional<std::string> normalize_url(std::string_view url);

// Resolves an href against a base page url. Non-http(s) targets yield nullopt.
std::optional<std::string> resolve_url(std::string_view base, std::string_view href);

std::string url_host(std::string_view url);
// Last two host labels with a leading "www." ignored: "a.b.example.com" -> "example.com".
std::string registered_domain(std::string_view url);
// Path plus "?query", used for robots matching.
std::string url_path_and_query(std::string_view url);

std::string url_encode(std::string_view s);

}  // namespace wkw

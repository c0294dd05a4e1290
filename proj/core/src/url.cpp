#include "wkw/url.hpp"

#include <cctype>
#include <vector>

#include "wkw/text.hpp"

namespace wkw {

namespace {

int default_port(std::string_view scheme) { return scheme == "https" ? 443 : 80; }

std::string remove_dot_segments(std::string_view path) {
  // path begins with '/'
  std::vector<std::string> out;
  std::string_view rest = path.substr(1);
  for (;;) {
    auto slash = rest.find('/');
    bool last = slash == std::string_view::npos;
    std::string_view seg = last ? rest : rest.substr(0, slash);
    if (seg == "." || seg == "..") {
      if (seg == ".." && !out.empty()) out.pop_back();
      if (last) out.emplace_back();
    } else {
      out.emplace_back(seg);
    }
    if (last) break;
    rest.remove_prefix(slash + 1);
  }
  std::string result;
  for (const auto& s : out) result += "/" + s;
  return result.empty() ? "/" : result;
}

}  // namespace

std::optional<ParsedUrl> parse_url(std::string_view url) {
  std::string u = trim(url);
  auto hash = u.find('#');
  if (hash != std::string::npos) u.erase(hash);
  auto sep = u.find("://");
  if (sep == std::string::npos) return std::nullopt;
  ParsedUrl p;
  p.scheme = to_lower(u.substr(0, sep));
  if (p.scheme != "http" && p.scheme != "https") return std::nullopt;
  std::string rest = u.substr(sep + 3);
  auto path_at = rest.find_first_of("/?");
  std::string authority = rest.substr(0, path_at);
  std::string tail = path_at == std::string::npos ? "" : rest.substr(path_at);
  auto at = authority.rfind('@');
  if (at != std::string::npos) authority.erase(0, at + 1);
  auto colon = authority.rfind(':');
  if (colon != std::string::npos) {
    std::string port = authority.substr(colon + 1);
    authority.erase(colon);
    if (!port.empty()) {
      for (char c : port)
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
      if (port.size() > 5) return std::nullopt;
      p.port = std::stoi(port);
    }
  }
  p.host = to_lower(authority);
  if (p.host.empty()) return std::nullopt;
  if (p.port == default_port(p.scheme)) p.port = 0;
  auto q = tail.find('?');
  std::string path = q == std::string::npos ? tail : tail.substr(0, q);
  if (q != std::string::npos) p.query = tail.substr(q + 1);
  p.path = remove_dot_segments(path.empty() ? "/" : path);
  return p;
}

std::string to_string(const ParsedUrl& url) {
  std::string out = url.scheme + "://" + url.host;
  if (url.port != 0) out += ":" + std::to_string(url.port);
  out += url.path;
  if (!url.query.empty()) out += "?" + url.query;
  return out;
}

std::optional<std::string> normalize_url(std::string_view url) {
  auto p = parse_url(url);
  if (!p) return std::nullopt;
  return to_string(*p);
}

std::optional<std::string> resolve_url(std::string_view base, std::string_view href) {
  std::string h = trim(href);
  auto hash = h.find('#');
  if (hash != std::string::npos) h.erase(hash);
  if (h.find("://") != std::string::npos) return normalize_url(h);
  auto colon = h.find(':');
  auto slash = h.find('/');
  if (colon != std::string::npos && (slash == std::string::npos || colon < slash))
    return std::nullopt;  // mailto:, javascript:, ...
  auto b = parse_url(base);
  if (!b) return std::nullopt;
  if (h.empty()) return to_string(*b);
  if (h.rfind("//", 0) == 0) return normalize_url(b->scheme + ":" + h);
  ParsedUrl r = *b;
  r.query.clear();
  std::string path = h;
  auto q = h.find('?');
  if (q != std::string::npos) {
    r.query = h.substr(q + 1);
    path = h.substr(0, q);
  }
  if (path.empty()) {
    r.path = b->path;
    if (q == std::string::npos) r.query = b->query;
  } else if (path.front() == '/') {
    r.path = remove_dot_segments(path);
  } else {
    auto dir = b->path.substr(0, b->path.rfind('/') + 1);
    r.path = remove_dot_segments(dir + path);
  }
  return to_string(r);
}

std::string url_host(std::string_view url) {
  auto p = parse_url(url);
  return p ? p->host : std::string{};
}

std::string registered_domain(std::string_view url) {
  std::string host = url_host(url);
  if (host.rfind("www.", 0) == 0) host.erase(0, 4);
  auto last = host.rfind('.');
  if (last == std::string::npos || last == 0) return host;
  auto prev = host.rfind('.', last - 1);
  return prev == std::string::npos ? host : host.substr(prev + 1);
}

std::string url_path_and_query(std::string_view url) {
  auto p = parse_url(url);
  if (!p) return "/";
  return p->query.empty() ? p->path : p->path + "?" + p->query;
}

std::string url_encode(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 15]);
    }
  }
  return out;
}

}  // namespace wkw

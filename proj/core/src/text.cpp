#include "wkw/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>

namespace wkw {

namespace {

constexpr std::array<std::string_view, 13> kLegalSuffixes = {
    "inc", "inc.", "corp", "corp.", "corporation", "llc", "ltd",
    "ltd.", "co", "co.", "gmbh", "ag", "plc"};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n\f\v");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n\f\v");
  return std::string(s.substr(b, e - b + 1));
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::string normalize_name(std::string_view raw) {
  std::string name = collapse_whitespace(raw);
  for (;;) {
    while (!name.empty() && (name.back() == ',' || name.back() == ' ')) name.pop_back();
    auto sp = name.rfind(' ');
    if (sp == std::string::npos) break;
    std::string_view last = std::string_view(name).substr(sp + 1);
    bool stripped = false;
    for (auto suffix : kLegalSuffixes) {
      if (last == suffix) {
        name.erase(sp);
        stripped = true;
        break;
      }
    }
    if (!stripped) break;
  }
  return name;
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string content_hash(std::string_view data) { return hex64(fnv1a64(data)); }

}  // namespace wkw

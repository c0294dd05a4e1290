#include "wkw/robots.hpp"

#include <sstream>

#include "wkw/text.hpp"

namespace wkw {

namespace {

bool match_from(std::string_view pattern, std::string_view path) {
  if (pattern.empty()) return true;
  if (pattern == "$") return path.empty();
  if (pattern.front() == '*') {
    for (std::size_t i = 0; i <= path.size(); ++i)
      if (match_from(pattern.substr(1), path.substr(i))) return true;
    return false;
  }
  if (path.empty() || pattern.front() != path.front()) return false;
  return match_from(pattern.substr(1), path.substr(1));
}

}  // namespace

RobotsRules RobotsRules::parse(std::string_view robots_txt) {
  RobotsRules rules;
  std::istringstream in{std::string(robots_txt)};
  std::string line;
  bool in_star_group = false;
  bool last_was_agent = false;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string key = to_lower(trim(line.substr(0, colon)));
    std::string value = trim(line.substr(colon + 1));
    if (key == "user-agent") {
      bool star = value == "*";
      in_star_group = last_was_agent ? (in_star_group || star) : star;
      last_was_agent = true;
      continue;
    }
    last_was_agent = false;
    if (!in_star_group) continue;
    if (key == "disallow" && !value.empty()) rules.rules_.push_back({value, false});
    if (key == "allow" && !value.empty()) rules.rules_.push_back({value, true});
  }
  return rules;
}

bool RobotsRules::allowed(std::string_view path) const {
  const Rule* best = nullptr;
  for (const Rule& r : rules_) {
    if (!match_from(r.pattern, path)) continue;
    if (!best || r.pattern.size() > best->pattern.size() ||
        (r.pattern.size() == best->pattern.size() && r.allow))
      best = &r;
  }
  return !best || best->allow;
}

}  // namespace wkw

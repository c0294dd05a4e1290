#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace wkw {

// Rules of the `User-agent: *` group of a robots.txt file. Longest matching
// prefix wins; Allow beats Disallow on equal length. `*` wildcards and the `$`
// end anchor are honored.
class RobotsRules {
 public:
  static RobotsRules parse(std::string_view robots_txt);
  static RobotsRules allow_all() { return {}; }

  bool allowed(std::string_view path_and_query) const;
  bool empty() const { return rules_.empty(); }

 private:
  struct Rule {
    std::string pattern;
    bool allow = false;
  };
  std::vector<Rule> rules_;
};

}  // namespace wkw

#include "wkw/simweb.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "wkw/error.hpp"
#include "wkw/resolution.hpp"
#include "wkw/text.hpp"

namespace wkw {

using nlohmann::json;

void WorldConfig::validate() const {
  auto prob = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(what) + " must lie in [0,1]");
  };
  prob(presence, "presence");
  prob(supply_density, "supply_density");
  prob(offtopic_link_rate, "offtopic_link_rate");
  prob(noise_rate, "noise_rate");
  if (n_companies < 1) throw ConfigError("n_companies must be at least 1");
  if (n_sectors < 1 || n_locations < 1 || n_products < 1)
    throw ConfigError("need at least one sector, location and product");
  if (hidden_sectors >= n_sectors) throw ConfigError("at least one sector must be visible");
  if (regional_locations > n_locations) throw ConfigError("more regional locations than locations");
  if (listings_per_page < 1) throw ConfigError("listings_per_page must be at least 1");
  if (n_directory_pages == 0 && presence > 0.0)
    throw ConfigError("companies with web presence need at least one directory page");
  const std::size_t planted = hidden_sectors * hidden_per_sector +
                              regional_locations * regional_per_location + planted_bridges;
  if (planted + hidden_sectors > n_companies)
    throw ConfigError("planted gaps need more companies than n_companies provides");
}

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}
  double unit() { return static_cast<double>(g_() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(unit() * static_cast<double>(n)));
  }
  bool chance(double p) { return unit() < p; }
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 g_;
};

const std::vector<std::string> kSectors = {
    "vacuum systems",      "semiconductor equipment", "precision optics", "specialty chemicals",
    "industrial lasers",   "wafer handling",          "thin film deposition", "cleanroom supplies",
    "photomask",           "metrology",               "motion control",   "power electronics"};
const std::vector<std::string> kLocations = {"Austin", "Dresden", "Hsinchu", "Eindhoven",
                                             "Boise",  "Grenoble", "Albany", "Kumamoto",
                                             "Penang", "Leuven",   "Phoenix", "Singapore"};
const std::vector<std::string> kProducts = {
    "turbomolecular pumps", "gate valves",      "ion sources",     "optical filters",
    "etch gases",           "laser diodes",     "end effectors",   "sputter targets",
    "hepa filters",         "pellicles",        "ellipsometers",   "linear stages",
    "rf generators",        "gas cabinets",     "load locks",      "wafer carriers",
    "beam splitters",       "photoresists",     "servo drives",    "mass flow controllers",
    "cryopumps",            "dicing blades",    "quartz crucibles", "overlay sensors"};
const std::vector<std::string> kTargetWords = {
    "Dynamics", "Technologies", "Instruments", "Precision",    "Fabrication", "Scientific",
    "Industries", "Components", "Engineering", "Microsystems", "Devices",     "Works"};
const std::vector<std::string> kOfftargetWords = {
    "Media", "Foods",     "Apparel",    "Travel",  "Studios",   "Brands",
    "Beverages", "Outfitters", "Kitchens", "Records", "Fitness", "Interiors"};
const std::vector<std::string> kSuffixes = {" Inc.", " Corp", " LLC", " GmbH", " Ltd", ""};
const std::vector<std::string> kOfftopicSites = {"weekend-daily", "trend-buzz",  "style-corner",
                                                 "foodie-notes",  "travel-tales", "gadget-gossip",
                                                 "pop-digest",    "home-ideas"};
const std::vector<std::string> kPhrases = {
    "brunch ideas",   "celebrity news", "holiday deals", "playlist picks", "fashion week recap",
    "home makeover",  "travel hacks",   "weekend reads", "movie night",    "street food tour"};

std::string vocab(const std::vector<std::string>& v, std::size_t i) {
  if (i < v.size()) return v[i];
  return v[i % v.size()] + " " + std::to_string(i / v.size() + 1);
}

std::string slug(std::string_view s) {
  std::string out;
  for (const auto& t : tokenize(s)) out += (out.empty() ? "" : "-") + t;
  return out;
}

std::string capitalized(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

// Pronounceable five-letter stems; the block key of every generated name is
// kept unique so unrelated firms never compete in resolution.
class NameFactory {
 public:
  explicit NameFactory(Rng& rng) : rng_(rng) {}

  std::string stem() {
    static const std::string kC = "bdfgklmnprstvz";
    static const std::string kV = "aeiou";
    for (int attempt = 0;; ++attempt) {
      std::string s;
      s += kC[rng_.below(kC.size())];
      s += kV[rng_.below(kV.size())];
      s += kC[rng_.below(kC.size())];
      s += kV[rng_.below(kV.size())];
      s += kC[rng_.below(kC.size())];
      if (attempt > 5000) s += std::to_string(attempt);
      if (used_.insert(s.substr(0, 4)).second) return capitalized(s);
    }
  }

  std::string company(const std::vector<std::string>& words, bool suffix) {
    std::string base = stem() + " " + words[rng_.below(words.size())];
    return suffix ? base + kSuffixes[rng_.below(kSuffixes.size())] : base;
  }

 private:
  Rng& rng_;
  std::set<std::string> used_;
};

enum class Role { Normal, HiddenMember, Regional, BridgeMiddle };

struct Company {
  std::string display;
  std::string norm;
  std::string domain;
  std::size_t sector = 0;
  std::size_t location = 0;
  std::vector<std::size_t> products;
  Role role = Role::Normal;
  bool present = true;
};

struct PageBuilder {
  std::string url;
  std::vector<std::string> lines;
  std::vector<Anchor> links;
  std::set<std::string> mentions;

  explicit PageBuilder(std::string u, std::vector<std::string> l = {}) : url(std::move(u)), lines(std::move(l)) {}
  void line(std::string s) { lines.push_back(std::move(s)); }
  void link(std::string href, std::string text) { links.push_back({std::move(href), std::move(text)}); }
  void mention(std::string_view name) { mentions.insert(normalize_name(name)); }
};

struct Builder {
  const WorldConfig& cfg;
  Rng rng;
  std::vector<std::string> sectors, locations, products;
  std::vector<Company> targets;
  std::vector<Company> offtargets;
  std::set<std::pair<std::size_t, std::size_t>> supplies;      // target index pairs
  std::set<std::pair<std::size_t, std::size_t>> partners;
  std::set<std::pair<std::size_t, std::size_t>> off_partners;  // offtarget index pairs
  std::map<std::size_t, std::vector<std::size_t>> out_edges;   // visible supplies
  std::vector<PageBuilder> pages;
  std::vector<std::string> offtopic_posts;
  std::vector<std::string> news_articles;

  explicit Builder(const WorldConfig& c) : cfg(c), rng(c.seed) {}

  const std::string& sector_of(const Company& c) const { return sectors[c.sector]; }
  const std::string& location_of(const Company& c) const { return locations[c.location]; }
  std::string home(const Company& c) const { return "https://" + c.domain + "/"; }
  std::string anchor_for(const Company& c) const { return c.display + " (" + sector_of(c) + ")"; }

  void profile(PageBuilder& p, const Company& c, bool with_location = true, bool with_sector = true) {
    p.line("[[COMPANY: " + c.display + "]]");
    p.mention(c.display);
    if (with_location) {
      p.line(c.display + " is located in " + location_of(c) + ".");
      p.mention(location_of(c));
    }
    if (with_sector) {
      p.line(c.display + " operates in the " + sector_of(c) + " sector.");
      p.mention(sector_of(c));
    }
  }

  bool reaches_within_two(std::size_t from, std::size_t to) const {
    auto it = out_edges.find(from);
    if (it == out_edges.end()) return false;
    for (std::size_t x : it->second) {
      if (x == to) return true;
      auto nx = out_edges.find(x);
      if (nx != out_edges.end() &&
          std::find(nx->second.begin(), nx->second.end(), to) != nx->second.end())
        return true;
    }
    return false;
  }

  void add_visible_edge(std::size_t a, std::size_t b) {
    if (a == b || !supplies.insert({a, b}).second) return;
    out_edges[a].push_back(b);
  }
};

}  // namespace

std::set<std::string> WorldTruth::discoverable() const {
  std::set<std::string> seen;
  for (const auto& [url, names] : page_entities)
    for (const auto& n : names)
      if (targets.count(n)) seen.insert(n);
  return seen;
}

void WorldTruth::write(std::ostream& out) const {
  std::stringstream kg;
  export_graph(graph, kg);
  std::string line;
  while (std::getline(kg, line)) {
    json j = json::parse(line);
    if (j.at("kind") == "entity" && j.at("type") == "COMPANY") {
      const std::string name = j.at("name").get<std::string>();
      j["target"] = targets.count(name) != 0;
      j["planted"] = planted.count(name) != 0;
    }
    out << j.dump() << '\n';
  }
  for (const auto& [url, names] : page_entities)
    out << json{{"kind", "page"}, {"url", url}, {"entities", names}}.dump() << '\n';
}

WorldTruth WorldTruth::read(std::istream& in) {
  WorldTruth truth;
  std::stringstream kg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed truth record: ") + e.what(), line_no);
    }
    const std::string kind = j.value("kind", std::string{});
    if (kind == "page") {
      truth.page_entities[j.at("url").get<std::string>()] =
          j.at("entities").get<std::set<std::string>>();
      kg << '\n';  // keep line numbers aligned for import errors
      continue;
    }
    if (kind == "entity") {
      const std::string name = j.value("name", std::string{});
      if (j.value("target", false)) truth.targets.insert(name);
      if (j.value("planted", false)) truth.planted.insert(name);
    }
    kg << line << '\n';
  }
  truth.graph = import_graph(kg);
  return truth;
}

void WorldTruth::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  write(out);
}

WorldTruth WorldTruth::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read truth file " + path);
  return read(in);
}

World generate_world(const WorldConfig& cfg) {
  cfg.validate();
  Builder b(cfg);
  Rng& rng = b.rng;
  NameFactory names(rng);

  for (std::size_t i = 0; i < cfg.n_sectors; ++i) b.sectors.push_back(vocab(kSectors, i));
  for (std::size_t i = 0; i < cfg.n_locations; ++i) b.locations.push_back(vocab(kLocations, i));
  for (std::size_t i = 0; i < cfg.n_products; ++i) b.products.push_back(vocab(kProducts, i));
  const std::size_t n_visible_sectors = cfg.n_sectors - cfg.hidden_sectors;
  const std::size_t first_regional = cfg.n_locations - cfg.regional_locations;

  auto new_target = [&](Role role, std::size_t sector, std::size_t location) {
    Company c;
    c.display = names.company(kTargetWords, true);
    c.norm = normalize_name(c.display);
    c.domain = slug(c.norm) + ".example";
    c.role = role;
    c.sector = sector;
    c.location = location;
    std::size_t n_products = 1 + rng.below(2);
    for (std::size_t k = 0; k < n_products; ++k) {
      std::size_t p = rng.below(cfg.n_products);
      if (std::find(c.products.begin(), c.products.end(), p) == c.products.end())
        c.products.push_back(p);
    }
    c.present = rng.chance(cfg.presence);
    b.targets.push_back(std::move(c));
  };

  for (std::size_t h = 0; h < cfg.hidden_sectors; ++h)
    for (std::size_t j = 0; j < cfg.hidden_per_sector; ++j)
      new_target(Role::HiddenMember, n_visible_sectors + h, rng.below(cfg.n_locations));
  for (std::size_t r = 0; r < cfg.regional_locations; ++r)
    for (std::size_t j = 0; j < cfg.regional_per_location; ++j)
      new_target(Role::Regional, rng.below(n_visible_sectors), first_regional + r);
  for (std::size_t j = 0; j < cfg.planted_bridges; ++j)
    new_target(Role::BridgeMiddle, rng.below(n_visible_sectors), rng.below(cfg.n_locations));
  const std::size_t first_normal = b.targets.size();
  for (std::size_t j = 0; first_normal + j < cfg.n_companies; ++j) {
    // One visible representative per hidden sector, the rest spread evenly.
    std::size_t sector = j < cfg.hidden_sectors ? n_visible_sectors + j
                                                : (j - cfg.hidden_sectors) % n_visible_sectors;
    new_target(Role::Normal, sector, rng.below(cfg.n_locations));
  }
  for (std::size_t j = 0; j < cfg.n_offtarget; ++j) {
    Company c;
    c.display = names.company(kOfftargetWords, true);
    c.norm = normalize_name(c.display);
    c.domain = slug(c.display) + ".example";
    b.offtargets.push_back(std::move(c));
  }

  std::vector<std::size_t> visible;
  for (std::size_t i = first_normal; i < b.targets.size(); ++i)
    if (b.targets[i].present) visible.push_back(i);

  // Visible supply network among listed companies.
  for (std::size_t a : visible)
    for (std::size_t c : visible)
      if (a != c && rng.chance(cfg.supply_density)) b.add_visible_edge(a, c);
  for (std::size_t a : visible)
    for (std::size_t c : visible)
      if (a < c && rng.chance(cfg.supply_density / 3)) b.partners.insert({a, c});

  // Planted bridges: c -> m -> d where m is only described on an orphan
  // page, while some other pair in the same sectors is visibly bridged.
  struct Bridge {
    std::size_t c, m, d;
  };
  std::vector<Bridge> bridges;
  for (std::size_t i = 0; i < b.targets.size(); ++i) {
    if (b.targets[i].role != Role::BridgeMiddle || !b.targets[i].present) continue;
    if (visible.size() < 5) break;
    for (int attempt = 0; attempt < 400; ++attempt) {
      std::size_t c = visible[rng.below(visible.size())];
      std::size_t d = visible[rng.below(visible.size())];
      if (c == d || b.targets[c].sector == b.targets[d].sector || b.reaches_within_two(c, d)) continue;
      bool used = false;
      for (const Bridge& br : bridges) used |= br.c == c || br.d == d;
      if (used) continue;
      std::vector<std::size_t> as, bs;
      for (std::size_t v : visible) {
        if (v == c || v == d) continue;
        if (b.targets[v].sector == b.targets[c].sector) as.push_back(v);
        if (b.targets[v].sector == b.targets[d].sector) bs.push_back(v);
      }
      if (as.empty() || bs.empty()) continue;
      std::size_t a = as[rng.below(as.size())];
      std::size_t z = bs[rng.below(bs.size())];
      std::size_t x = visible[rng.below(visible.size())];
      if (x == a || x == z || x == c || x == d) continue;
      auto saved_edges = b.out_edges;
      auto saved_supplies = b.supplies;
      b.add_visible_edge(a, x);
      b.add_visible_edge(x, z);
      if (b.reaches_within_two(c, d)) {
        b.out_edges = std::move(saved_edges);
        b.supplies = std::move(saved_supplies);
        continue;
      }
      bridges.push_back({c, i, d});
      break;
    }
  }

  auto add_page = [&](PageBuilder p) { b.pages.push_back(std::move(p)); };

  // Off-topic sites: dense internal linking, off-target firms, no domain vocabulary.
  const std::size_t posts = cfg.offtopic_pages_per_site;
  std::vector<std::string> site_domains;
  for (std::size_t s = 0; s < cfg.n_offtopic_sites; ++s)
    site_domains.push_back(slug(vocab(kOfftopicSites, s)) + ".example");
  for (std::size_t s = 0; s < site_domains.size(); ++s)
    for (std::size_t k = 1; k <= posts; ++k)
      b.offtopic_posts.push_back("https://" + site_domains[s] + "/post-" + std::to_string(k));
  auto random_post = [&]() -> std::string {
    return b.offtopic_posts.empty() ? std::string{} : b.offtopic_posts[rng.below(b.offtopic_posts.size())];
  };
  for (std::size_t s = 0; s < site_domains.size(); ++s) {
    const std::string base = "https://" + site_domains[s];
    PageBuilder index{base + "/"};
    index.line("Welcome to " + site_domains[s] + ". Fresh stories every day.");
    for (std::size_t k = 1; k <= std::min<std::size_t>(posts, 5); ++k)
      index.link(base + "/post-" + std::to_string(k), "Story " + std::to_string(k));
    add_page(std::move(index));
    for (std::size_t k = 1; k <= posts; ++k) {
      PageBuilder p{base + "/post-" + std::to_string(k)};
      p.line("Today: " + kPhrases[rng.below(kPhrases.size())] + ".");
      if (!b.offtargets.empty()) {
        std::size_t x = rng.below(b.offtargets.size());
        std::size_t y = rng.below(b.offtargets.size());
        p.line("[[COMPANY: " + b.offtargets[x].display + "]]");
        p.mention(b.offtargets[x].display);
        if (x != y) {
          p.line(b.offtargets[x].display + " partners with " + b.offtargets[y].display + ".");
          p.mention(b.offtargets[y].display);
          b.off_partners.insert({std::min(x, y), std::max(x, y)});
        }
      }
      if (k < posts) p.link(base + "/post-" + std::to_string(k + 1), "Next: " + kPhrases[k % kPhrases.size()]);
      for (int l = 0; l < 2; ++l)
        p.link(base + "/post-" + std::to_string(1 + rng.below(posts)), kPhrases[rng.below(kPhrases.size())]);
      p.link(random_post(), "Trending: " + kPhrases[rng.below(kPhrases.size())]);
      add_page(std::move(p));
    }
    if (s + 1 == site_domains.size() && site_domains.size() >= 3)
      add_page(PageBuilder{base + "/robots.txt", {"User-agent: *", "Disallow: /"}});
  }

  // News desk.
  const std::string news = "https://industrynews.example";
  for (std::size_t k = 1; k <= cfg.n_news_pages; ++k)
    b.news_articles.push_back(news + "/article-" + std::to_string(k));
  std::vector<std::pair<std::size_t, std::size_t>> edge_list(b.supplies.begin(), b.supplies.end());
  {
    PageBuilder index{news + "/"};
    index.line("Industry news and supply chain updates.");
    for (std::size_t k = 1; k <= cfg.n_news_pages; ++k)
      index.link(b.news_articles[k - 1], "Industry update " + std::to_string(k));
    add_page(std::move(index));
  }
  for (std::size_t k = 1; k <= cfg.n_news_pages; ++k) {
    PageBuilder p{b.news_articles[k - 1]};
    p.line("Industry update " + std::to_string(k) + ".");
    if (!edge_list.empty()) {
      auto [x, y] = edge_list[rng.below(edge_list.size())];
      const Company& cx = b.targets[x];
      const Company& cy = b.targets[y];
      p.line("[[COMPANY: " + cx.display + "]]");
      p.line(cx.display + " supplies " + cy.display + ".");
      p.mention(cx.display);
      p.mention(cy.display);
      p.link(b.home(cx), b.anchor_for(cx));
      p.link(b.home(cy), b.anchor_for(cy));
    }
    if (!visible.empty()) {
      const Company& cz = b.targets[visible[rng.below(visible.size())]];
      b.profile(p, cz, true, false);
      p.link(b.home(cz), b.anchor_for(cz));
    }
    if (!b.offtargets.empty()) {
      const Company& o = b.offtargets[rng.below(b.offtargets.size())];
      p.line("[[COMPANY: " + o.display + "]]");
      p.mention(o.display);
    }
    if (!b.offtopic_posts.empty()) p.link(random_post(), "Also trending: " + kPhrases[k % kPhrases.size()]);
    if (k < cfg.n_news_pages) p.link(b.news_articles[k], "Next update");
    add_page(std::move(p));
  }

  // Supplier directory, paginated per sector; hidden sectors list only their representative.
  const std::string dir = "https://supplierdirectory.example";
  std::map<std::size_t, std::vector<std::size_t>> by_sector;
  for (std::size_t v : visible) by_sector[b.targets[v].sector].push_back(v);
  std::vector<std::pair<std::size_t, std::size_t>> page_slots;  // (sector, page number)
  for (std::size_t round = 0; page_slots.size() < cfg.n_directory_pages; ++round) {
    bool any = false;
    for (const auto& [sector, members] : by_sector) {
      if (round * cfg.listings_per_page >= members.size()) continue;
      if (page_slots.size() == cfg.n_directory_pages) break;
      page_slots.emplace_back(sector, round + 1);
      any = true;
    }
    if (!any) break;
  }
  auto dir_url = [&](std::size_t sector, std::size_t page) {
    return dir + "/sector/" + slug(b.sectors[sector]) + "?page=" + std::to_string(page);
  };
  std::set<std::pair<std::size_t, std::size_t>> slot_set(page_slots.begin(), page_slots.end());
  {
    PageBuilder index{dir + "/"};
    index.line("Supplier directory. Browse suppliers by sector.");
    for (const auto& [sector, page] : page_slots)
      if (page == 1) index.link(dir_url(sector, 1), b.sectors[sector] + " suppliers");
    add_page(std::move(index));
  }
  for (const auto& [sector, page] : page_slots) {
    PageBuilder p{dir_url(sector, page)};
    p.line(capitalized(b.sectors[sector]) + " suppliers directory, page " + std::to_string(page) + ".");
    const auto& members = by_sector[sector];
    for (std::size_t k = (page - 1) * cfg.listings_per_page;
         k < std::min(members.size(), page * cfg.listings_per_page); ++k) {
      const Company& c = b.targets[members[k]];
      b.profile(p, c);
      p.link(b.home(c), b.anchor_for(c));
    }
    if (slot_set.count({sector, page + 1}))
      p.link(dir_url(sector, page + 1), "more " + b.sectors[sector] + " suppliers");
    p.link(dir + "/", "directory home");
    add_page(std::move(p));
  }
  for (std::size_t h = 0; h < cfg.hidden_sectors; ++h) {
    const std::size_t sector = n_visible_sectors + h;
    PageBuilder p{dir + "/archive/" + slug(b.sectors[sector]) + "-suppliers"};
    p.line(capitalized(b.sectors[sector]) + " suppliers and manufacturers directory.");
    bool any = false;
    for (const Company& c : b.targets)
      if (c.sector == sector && c.present) {
        b.profile(p, c);
        any = true;
      }
    if (any) add_page(std::move(p));
  }

  // Company registry with a robots-protected filings area.
  const std::string reg = "https://companyregistry.example";
  add_page(PageBuilder{reg + "/robots.txt", {"User-agent: *", "Disallow: /private/"}});
  {
    std::map<char, std::vector<std::size_t>> by_letter;
    for (std::size_t v : visible)
      if (rng.chance(0.6)) by_letter[static_cast<char>(std::tolower(b.targets[v].display[0]))].push_back(v);
    PageBuilder index{reg + "/"};
    index.line("Company registry. Registered companies by initial letter.");
    for (const auto& [letter, members] : by_letter) {
      const std::string url = reg + "/companies/" + std::string(1, letter);
      index.link(url, std::string("Companies starting with ") + static_cast<char>(std::toupper(letter)));
      PageBuilder p{url};
      p.line(std::string("Registered companies: letter ") + static_cast<char>(std::toupper(letter)) + ".");
      for (std::size_t v : members) {
        const Company& c = b.targets[v];
        b.profile(p, c, true, false);
        p.link(b.home(c), c.display);
      }
      const std::string filing = reg + "/private/filing-" + std::string(1, letter);
      p.link(filing, "Filings");
      add_page(std::move(p));
      PageBuilder f{filing};
      f.line("Confidential filing index.");
      add_page(std::move(f));
    }
    add_page(std::move(index));
  }
  for (std::size_t r = 0; r < cfg.regional_locations; ++r) {
    const std::size_t loc = first_regional + r;
    std::vector<const Company*> members;
    std::set<std::string> kw;
    for (const Company& c : b.targets)
      if (c.role == Role::Regional && c.location == loc && c.present) {
        members.push_back(&c);
        kw.insert(b.sectors[c.sector]);
      }
    if (members.empty()) continue;
    PageBuilder p{reg + "/regional/" + slug(b.locations[loc])};
    std::string heading;
    for (const auto& k : kw) heading += (heading.empty() ? "" : " and ") + k;
    p.line(capitalized(heading) + " companies in " + b.locations[loc] + ".");
    for (const Company* c : members) b.profile(p, *c);
    add_page(std::move(p));
  }

  // Orphan bridge pages.
  for (const Bridge& br : bridges) {
    const Company& c = b.targets[br.c];
    const Company& m = b.targets[br.m];
    const Company& d = b.targets[br.d];
    PageBuilder p{news + "/archive/supply-chain-" + slug(m.norm)};
    b.profile(p, m);
    p.line(c.display + " supplies " + m.display + ".");
    p.line(m.display + " supplies " + d.display + ".");
    p.line("Key suppliers to " + d.display + " include " + m.display + ".");
    p.line("Customers of " + c.display + " include " + m.display + ".");
    p.mention(c.display);
    p.mention(d.display);
    b.supplies.insert({br.c, br.m});
    b.supplies.insert({br.m, br.d});
    add_page(std::move(p));
  }

  // Company sites.
  for (std::size_t v : visible) {
    const Company& c = b.targets[v];
    PageBuilder p{b.home(c)};
    p.line(c.display + " home page.");
    b.profile(p, c);
    for (std::size_t prod : c.products) {
      p.line(c.display + " manufactures " + b.products[prod] + ".");
      p.mention(b.products[prod]);
    }
    if (auto it = b.out_edges.find(v); it != b.out_edges.end()) {
      for (std::size_t y : it->second) {
        p.line(c.display + " supplies " + b.targets[y].display + ".");
        p.mention(b.targets[y].display);
        p.link(b.home(b.targets[y]), b.anchor_for(b.targets[y]));
      }
    }
    for (const auto& [x, y] : b.partners) {
      if (x != v) continue;
      p.line(c.display + " partners with " + b.targets[y].display + ".");
      p.mention(b.targets[y].display);
      p.link(b.home(b.targets[y]), b.anchor_for(b.targets[y]));
    }
    if (rng.chance(cfg.noise_rate)) {
      if (rng.chance(0.5)) {
        p.line("[[LOCATION: " + b.location_of(c) + "]]");
        p.line("[[supplies_to: " + c.display + " -> " + b.location_of(c) + "]]");
      } else if (visible.size() > 1) {
        std::size_t y = visible[rng.below(visible.size())];
        if (y != v && !b.supplies.count({v, y})) {
          p.line("[[supplies_to: " + c.display + " -> " + b.targets[y].display + " :: 0.2]]");
          p.mention(b.targets[y].display);
        }
      }
    }
    p.link(b.home(c) + "products", "products");
    if (!b.offtopic_posts.empty() && rng.chance(cfg.offtopic_link_rate))
      p.link(random_post(), kPhrases[rng.below(kPhrases.size())]);
    if (!b.news_articles.empty() && rng.chance(0.3))
      p.link(b.news_articles[rng.below(b.news_articles.size())], "In the news");
    add_page(std::move(p));

    PageBuilder prod_page{b.home(c) + "products"};
    prod_page.line(c.display + " product catalogue.");
    prod_page.mention(c.display);
    for (std::size_t prod : c.products) {
      prod_page.line("[[PRODUCT: " + b.products[prod] + "]]");
      prod_page.line(c.display + " manufactures " + b.products[prod] + ".");
      prod_page.mention(b.products[prod]);
    }
    prod_page.link(b.home(c), "home");
    add_page(std::move(prod_page));
  }

  // Assemble the web and the truth.
  World world;
  std::vector<SimulatedPage> sim_pages;
  for (PageBuilder& p : b.pages) {
    std::string text;
    for (const auto& l : p.lines) text += l + "\n";
    if (!p.mentions.empty()) world.truth.page_entities[p.url] = p.mentions;
    std::vector<Anchor> links;
    for (auto& l : p.links)
      if (!l.href.empty()) links.push_back(std::move(l));
    sim_pages.push_back({p.url, std::move(text), std::move(links)});
  }
  world.web = SimulatedWeb(std::move(sim_pages));

  KnowledgeGraph& g = world.truth.graph;
  std::vector<EntityId> sector_ids, location_ids, product_ids, target_ids, off_ids;
  for (const auto& s : b.sectors) sector_ids.push_back(g.upsert_entity(s, EntityType::Sector, "", 0));
  for (const auto& l : b.locations) location_ids.push_back(g.upsert_entity(l, EntityType::Location, "", 0));
  for (const auto& p : b.products) product_ids.push_back(g.upsert_entity(p, EntityType::Product, "", 0));
  for (const Company& c : b.targets) {
    target_ids.push_back(g.upsert_entity(c.display, EntityType::Company, "", 0));
    world.truth.targets.insert(c.norm);
    if (c.role != Role::Normal && c.present) world.truth.planted.insert(c.norm);
  }
  for (const Company& c : b.offtargets) off_ids.push_back(g.upsert_entity(c.display, EntityType::Company, "", 0));
  auto rel = [&](EntityId s, RelationType t, EntityId d) { g.add_relation_unfiltered({s, d, t, 1.0, ""}); };
  for (std::size_t i = 0; i < b.targets.size(); ++i) {
    const Company& c = b.targets[i];
    rel(target_ids[i], RelationType::LocatedIn, location_ids[c.location]);
    rel(target_ids[i], RelationType::BelongsToSector, sector_ids[c.sector]);
    for (std::size_t p : c.products) rel(target_ids[i], RelationType::Produces, product_ids[p]);
  }
  for (const auto& [x, y] : b.supplies) rel(target_ids[x], RelationType::SuppliesTo, target_ids[y]);
  for (const auto& [x, y] : b.partners) rel(target_ids[x], RelationType::PartnersWith, target_ids[y]);
  for (const auto& [x, y] : b.off_partners) rel(off_ids[x], RelationType::PartnersWith, off_ids[y]);

  // Seeds mirror the usual source categories.
  world.seeds.push_back({dir + "/", SourceType::Directory});
  world.seeds.push_back({reg + "/", SourceType::Registry});
  for (std::size_t k = 0; k < std::min<std::size_t>(2, visible.size()); ++k)
    world.seeds.push_back({b.home(b.targets[visible[k]]), SourceType::Company});
  world.seeds.push_back({news + "/", SourceType::News});

  // Priors: true company counts per sector and per location.
  for (const Company& c : b.targets) {
    ++world.priors.sectors[normalize_name(b.sectors[c.sector])];
    ++world.priors.locations[normalize_name(b.locations[c.location])];
  }
  return world;
}

void write_seeds(const std::vector<Seed>& seeds, std::ostream& out) {
  for (const Seed& s : seeds)
    out << json{{"url", s.url}, {"source_type", to_string(s.source_type)}}.dump() << '\n';
}

void write_priors(const Priors& priors, std::ostream& out) {
  for (const auto& [name, n] : priors.sectors)
    out << json{{"kind", "sector"}, {"name", name}, {"expected", n}}.dump() << '\n';
  for (const auto& [name, n] : priors.locations)
    out << json{{"kind", "location"}, {"name", name}, {"expected", n}}.dump() << '\n';
}

WorldFiles world_files(const std::string& world_path) {
  std::string stem = world_path;
  const auto slash = stem.find_last_of('/');
  const auto dot = stem.rfind('.');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) stem.resize(dot);
  return {world_path, stem + ".truth.jsonl", stem + ".seeds.jsonl", stem + ".priors.jsonl"};
}

void save_world(const World& world, const std::string& world_path) {
  const WorldFiles f = world_files(world_path);
  auto open = [](const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    return out;
  };
  {
    auto out = open(f.world);
    out << world.web.to_json() << '\n';
  }
  world.truth.save(f.truth);
  {
    auto out = open(f.seeds);
    write_seeds(world.seeds, out);
  }
  {
    auto out = open(f.priors);
    write_priors(world.priors, out);
  }
}

EvalMetrics metrics_from_counts(std::size_t discovered, std::size_t tp, std::size_t gt) {
  EvalMetrics m;
  m.discovered = discovered;
  m.true_positives = tp;
  m.ground_truth = gt;
  m.precision = discovered ? static_cast<double>(tp) / discovered : 0.0;
  m.recall = gt ? static_cast<double>(tp) / gt : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

EvalMetrics evaluate_against_truth(const KnowledgeGraph& graph, const WorldTruth& truth) {
  std::set<std::string> found;
  for (const auto& [id, e] : graph.entities())
    if (e.type == EntityType::Company) found.insert(normalize_name(e.canonical_name));
  std::size_t tp = 0;
  for (const auto& n : found) tp += truth.targets.count(n);
  return metrics_from_counts(found.size(), tp, truth.targets.size());
}

double crawl_efficiency(std::size_t n_discovered, std::size_t pages_used) {
  if (pages_used == 0) throw InvalidInput("crawl efficiency is undefined for zero pages");
  return static_cast<double>(n_discovered) / static_cast<double>(pages_used);
}

AliasCorpus make_alias_corpus(std::size_t alias_pairs, std::size_t distinct, std::uint64_t seed) {
  Rng rng(seed);
  NameFactory names(rng);
  AliasCorpus corpus;
  KnowledgeGraph& g = corpus.graph;
  constexpr std::size_t kLocs = 10, kProds = 16;

  auto add_company = [&](const std::string& name, std::size_t loc, std::size_t prod) {
    EntityId id = g.upsert_entity(name, EntityType::Company, "", 1);
    EntityId l = g.upsert_entity(vocab(kLocations, loc), EntityType::Location, "", 1);
    EntityId p = g.upsert_entity(vocab(kProducts, prod), EntityType::Product, "", 1);
    g.add_relation({id, l, RelationType::LocatedIn, 1.0, ""});
    g.add_relation({id, p, RelationType::Produces, 1.0, ""});
    return normalize_name(name);
  };
  auto vary = [&](const std::string& base) {
    const std::string space_word = base.substr(base.find(' '));
    switch (rng.below(3)) {
      case 0: {
        static const std::vector<std::string> kTails = {" Group", " International", " Holdings"};
        return base + kTails[rng.below(kTails.size())];
      }
      case 1: {  // drop one letter inside the second word
        std::size_t at = base.find(' ') + 2 + rng.below(space_word.size() - 2);
        return base.substr(0, at) + base.substr(at + 1);
      }
      default: {  // transpose two letters inside the second word
        std::string v = base;
        std::size_t at = base.find(' ') + 2 + rng.below(space_word.size() - 3);
        std::swap(v[at], v[at + 1]);
        return v;
      }
    }
  };

  std::vector<std::string> stems;
  for (std::size_t i = 0; i < alias_pairs; ++i) {
    std::string stem = names.stem();
    stems.push_back(stem);
    std::string base = stem + " " + kTargetWords[rng.below(kTargetWords.size())];
    std::size_t loc = rng.below(kLocs / 2), prod = rng.below(kProds / 2);
    std::string a = add_company(base, loc, prod);
    std::string variant = vary(base);
    if (normalize_name(variant) == a) variant = base + " Group";
    std::string v = add_company(variant, loc, prod);
    corpus.same.insert({std::min(a, v), std::max(a, v)});
  }
  for (std::size_t i = 0; i < distinct; ++i) {
    // Every other distinct firm shares a stem (and thus a block) with a planted pair.
    std::string stem = (i % 2 == 0 && i / 2 < stems.size()) ? stems[i / 2] : names.stem();
    std::string name = stem + " " + kOfftargetWords[rng.below(kOfftargetWords.size())];
    add_company(name, kLocs / 2 + rng.below(kLocs / 2), kProds / 2 + rng.below(kProds / 2));
  }
  return corpus;
}

}  // namespace wkw

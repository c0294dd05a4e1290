#include "wkw/extraction.hpp"

#include <charconv>
#include <fstream>
#include <mutex>

#include <json.hpp>

#include "wkw/error.hpp"
#include "wkw/text.hpp"

namespace wkw {

using nlohmann::json;

std::optional<EntityType> ExtractionResult::mention_type(std::string_view surface) const {
  const std::string key = normalize_name(surface);
  for (const Mention& m : mentions)
    if (normalize_name(m.surface) == key) return m.type;
  return std::nullopt;
}

bool satisfies_endpoint_closure(const ExtractionResult& r) {
  auto in_range = [](double c) { return c >= 0.0 && c <= 1.0; };
  for (const Mention& m : r.mentions)
    if (!in_range(m.confidence)) return false;
  for (const Triple& t : r.triples) {
    if (!in_range(t.confidence)) return false;
    if (!r.mention_type(t.source) || !r.mention_type(t.target)) return false;
  }
  return true;
}

namespace {

json result_json(const ExtractionResult& r) {
  json mentions = json::array();
  for (const Mention& m : r.mentions)
    mentions.push_back({{"text", m.surface}, {"type", to_string(m.type)}, {"conf", m.confidence}});
  json triples = json::array();
  for (const Triple& t : r.triples)
    triples.push_back({{"src", t.source},
                       {"rel", to_string(t.relation)},
                       {"dst", t.target},
                       {"conf", t.confidence}});
  return {{"mentions", std::move(mentions)}, {"triples", std::move(triples)}};
}

ExtractionResult result_from(const json& j) {
  ExtractionResult r;
  for (const json& m : j.at("mentions")) {
    auto type = parse_entity_type(m.at("type").get<std::string>());
    if (!type) throw ParseError("mention type outside schema");
    r.mentions.push_back({m.at("text").get<std::string>(), *type, m.value("conf", 1.0)});
  }
  for (const json& t : j.at("triples")) {
    auto rel = parse_relation_type(t.at("rel").get<std::string>());
    if (!rel) throw ParseError("relation type outside schema");
    r.triples.push_back({t.at("src").get<std::string>(), *rel, t.at("dst").get<std::string>(),
                         t.value("conf", 1.0)});
  }
  return r;
}

std::optional<double> parse_confidence(std::string_view s) {
  std::string t = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  if (!(v >= 0.0 && v <= 1.0)) return std::nullopt;
  return v;
}

// Splits "body :: conf" into body and confidence (default when absent).
std::optional<std::pair<std::string, double>> split_confidence(std::string_view body,
                                                               double fallback) {
  auto sep = body.rfind("::");
  if (sep == std::string_view::npos) return std::pair{trim(body), fallback};
  auto conf = parse_confidence(body.substr(sep + 2));
  if (!conf) return std::nullopt;
  return std::pair{trim(body.substr(0, sep)), *conf};
}

class ResultBuilder {
 public:
  void mention(const std::string& surface, EntityType type, double conf) {
    if (normalize_name(surface).empty()) return;
    for (Mention& m : result_.mentions) {
      if (m.type == type && normalize_name(m.surface) == normalize_name(surface)) {
        m.confidence = std::max(m.confidence, conf);
        return;
      }
    }
    result_.mentions.push_back({surface, type, conf});
  }

  void triple(const std::string& src, RelationType rel, const std::string& dst, double conf) {
    if (normalize_name(src).empty() || normalize_name(dst).empty()) return;
    pending_.push_back({src, rel, dst, conf});
  }

  // Endpoints resolve against explicit mentions first; missing ones are added
  // with the schema type for their slot and the triple's confidence.
  ExtractionResult finish() {
    for (const Triple& t : pending_) {
      auto slots = allowed_endpoints(t.relation);
      if (!result_.mention_type(t.source)) mention(t.source, slots.source, t.confidence);
      if (!result_.mention_type(t.target)) mention(t.target, slots.target, t.confidence);
      result_.triples.push_back(t);
    }
    pending_.clear();
    return std::move(result_);
  }

 private:
  ExtractionResult result_;
  std::vector<Triple> pending_;
};

void parse_marker(std::string_view inner, ResultBuilder& out) {
  auto colon = inner.find(':');
  if (colon == std::string_view::npos) return;
  std::string head = trim(inner.substr(0, colon));
  std::string_view body = inner.substr(colon + 1);
  if (auto type = parse_entity_type(head)) {
    auto named = split_confidence(body, kMarkerDefaultConfidence);
    if (named) out.mention(named->first, *type, named->second);
    return;
  }
  if (auto rel = parse_relation_type(head)) {
    auto parts = split_confidence(body, kMarkerDefaultConfidence);
    if (!parts) return;
    const std::string& pair = parts->first;
    auto arrow = pair.find("->");
    if (arrow == std::string::npos) return;
    out.triple(trim(pair.substr(0, arrow)), *rel, trim(pair.substr(arrow + 2)), parts->second);
  }
}

bool ends_with_abbreviation(std::string_view before) {
  auto sp = before.find_last_of(" \t\n");
  std::string last = to_lower(sp == std::string_view::npos ? before : before.substr(sp + 1));
  return last == "inc" || last == "corp" || last == "ltd" || last == "co";
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    std::string s = trim(text.substr(start, end - start));
    if (!s.empty()) out.push_back(std::move(s));
    start = end + 1;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '\n' || c == ';') {
      flush(i);
    } else if (c == '.' || c == '!' || c == '?') {
      bool boundary = i + 1 == text.size() || text[i + 1] == ' ' || text[i + 1] == '\n' ||
                      text[i + 1] == '\t' || text[i + 1] == '\r';
      if (boundary && !(c == '.' && ends_with_abbreviation(text.substr(start, i - start))))
        flush(i);
    }
  }
  flush(text.size());
  return out;
}

constexpr std::size_t kMaxNameLength = 96;

bool plausible_name(const std::string& s) {
  return !s.empty() && s.size() <= kMaxNameLength && s.find("[[") == std::string::npos;
}

void match_patterns(const std::string& sentence, ResultBuilder& out) {
  struct Pattern {
    std::string_view infix;
    std::string_view suffix;
    RelationType rel;
  };
  static constexpr Pattern kPatterns[] = {
      {" is located in ", "", RelationType::LocatedIn},
      {" partners with ", "", RelationType::PartnersWith},
      {" operates in the ", " sector", RelationType::BelongsToSector},
      {" manufactures ", "", RelationType::Produces},
      {" supplies ", "", RelationType::SuppliesTo},
  };
  for (const Pattern& p : kPatterns) {
    auto at = sentence.find(p.infix);
    if (at == std::string::npos) continue;
    std::string head = trim(sentence.substr(0, at));
    std::string tail = sentence.substr(at + p.infix.size());
    if (!p.suffix.empty()) {
      if (tail.size() <= p.suffix.size() ||
          tail.compare(tail.size() - p.suffix.size(), p.suffix.size(), p.suffix) != 0)
        continue;
      tail.resize(tail.size() - p.suffix.size());
    }
    tail = trim(tail);
    if (!plausible_name(head) || !plausible_name(tail)) continue;
    out.triple(head, p.rel, tail, kPatternDefaultConfidence);
    return;
  }
}

}  // namespace

std::string result_to_json(const ExtractionResult& r) { return result_json(r).dump(); }

ExtractionResult result_from_json(std::string_view text) {
  try {
    return result_from(json::parse(text));
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed extraction result: ") + e.what());
  }
}

ExtractionResult FixtureRuleExtractor::extract(const PageText& page) const {
  ResultBuilder builder;
  std::string plain;
  plain.reserve(page.text.size());
  std::string_view text = page.text;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto open = text.find("[[", pos);
    if (open == std::string_view::npos) {
      plain.append(text.substr(pos));
      break;
    }
    auto close = text.find("]]", open + 2);
    if (close == std::string_view::npos) {
      plain.append(text.substr(pos));
      break;
    }
    plain.append(text.substr(pos, open - pos));
    plain.push_back('\n');
    parse_marker(text.substr(open + 2, close - open - 2), builder);
    pos = close + 2;
  }
  for (const std::string& sentence : split_sentences(plain)) match_patterns(sentence, builder);
  return builder.finish();
}

RecordedResponseExtractor::RecordedResponseExtractor(
    std::map<std::string, ExtractionResult> responses)
    : responses_(std::move(responses)) {}

RecordedResponseExtractor RecordedResponseExtractor::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read recorded responses " + path);
  std::map<std::string, ExtractionResult> responses;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      std::string key = j.at("url").get<std::string>() + "#" + j.at("hash").get<std::string>();
      responses[key] = result_from(j);
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad recorded response: ") + e.what(), line_no);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return RecordedResponseExtractor(std::move(responses));
}

ExtractionResult RecordedResponseExtractor::extract(const PageText& page) const {
  auto it = responses_.find(cache_key(page));
  if (it == responses_.end())
    throw ExtractorUnavailable("no recorded extraction response for " + page.url);
  return it->second;
}

std::unique_ptr<Extractor> make_extractor(const ExtractorConfig& config) {
  switch (config.kind) {
    case ExtractorKind::FixtureRules:
      return std::make_unique<FixtureRuleExtractor>();
    case ExtractorKind::ExternalLlmStub:
      if (config.recorded_responses.empty())
        throw ConfigError("external_llm_stub requires a recorded-response file");
      return std::make_unique<RecordedResponseExtractor>(
          RecordedResponseExtractor::from_file(config.recorded_responses));
  }
  throw ConfigError("unknown extractor kind");
}

std::string cache_key(const PageText& page) { return page.url + "#" + content_hash(page.text); }

ExtractionCache::ExtractionCache(std::chrono::seconds ttl, Clock clock)
    : ttl_(ttl), clock_(std::move(clock)) {}

std::chrono::system_clock::time_point ExtractionCache::now() const {
  return clock_ ? clock_() : std::chrono::system_clock::now();
}

std::optional<ExtractionResult> ExtractionCache::get(const std::string& key) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  if (now() - it->second.stored_at >= ttl_) return std::nullopt;
  try {
    return result_from_json(it->second.payload);
  } catch (const Error&) {
    return std::nullopt;
  }
}

void ExtractionCache::put(const std::string& key, const ExtractionResult& result) {
  put_raw(key, result_to_json(result));
}

void ExtractionCache::put_raw(const std::string& key, std::string payload) {
  std::unique_lock lock(mutex_);
  entries_[key] = Entry{std::move(payload), now()};
}

std::size_t ExtractionCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

void ExtractionCache::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) return;
  std::unique_lock lock(mutex_);
  std::string line;
  while (std::getline(in, line)) {
    try {
      json j = json::parse(line);
      auto stored = std::chrono::system_clock::time_point(
          std::chrono::seconds(j.at("stored_at").get<long long>()));
      entries_[j.at("key").get<std::string>()] = Entry{j.at("payload").get<std::string>(), stored};
    } catch (const json::exception&) {
      // unreadable line: treated as a miss
    }
  }
}

void ExtractionCache::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write cache " + path);
  std::shared_lock lock(mutex_);
  for (const auto& [key, entry] : entries_) {
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(
                    entry.stored_at.time_since_epoch())
                    .count();
    out << json{{"key", key}, {"stored_at", secs}, {"payload", entry.payload}}.dump() << '\n';
  }
}

CachedExtractor::CachedExtractor(const Extractor& inner, ExtractionCache& cache)
    : inner_(inner), cache_(cache) {}

ExtractionResult CachedExtractor::extract(const PageText& page) {
  const std::string key = cache_key(page);
  if (auto hit = cache_.get(key)) return *hit;
  ++invocations_;
  ExtractionResult result = inner_.extract(page);
  cache_.put(key, result);
  return result;
}

}  // namespace wkw

#include "wkw/coverage.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "wkw/error.hpp"
#include "wkw/text.hpp"

namespace wkw {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

IncidenceMatrix IncidenceMatrix::from_sets(
    const std::map<std::string, std::set<std::string>>& sources_by_entity) {
  IncidenceMatrix m;
  std::set<std::string> all;
  for (const auto& [e, ss] : sources_by_entity) all.insert(ss.begin(), ss.end());
  m.sources.assign(all.begin(), all.end());
  std::map<std::string, std::size_t> col;
  for (std::size_t j = 0; j < m.sources.size(); ++j) col[m.sources[j]] = j;
  for (const auto& [e, ss] : sources_by_entity) {
    m.entities.push_back(e);
    std::vector<std::uint8_t> row(m.sources.size(), 0);
    for (const auto& s : ss) row[col[s]] = 1;
    m.rows.push_back(std::move(row));
  }
  return m;
}

IncidenceMatrix parse_incidence_csv(std::istream& in) {
  IncidenceMatrix m;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  bool labelled = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (!header_seen) {
      header_seen = true;
      labelled = !cells.empty() && to_lower(cells[0]) == "entity";
      m.sources.assign(cells.begin() + (labelled ? 1 : 0), cells.end());
      if (m.sources.empty()) throw ParseError("incidence header names no sources", line_no);
      continue;
    }
    const std::size_t offset = labelled ? 1 : 0;
    if (cells.size() != m.sources.size() + offset)
      throw ParseError("expected " + std::to_string(m.sources.size() + offset) + " cells, got " +
                           std::to_string(cells.size()),
                       line_no);
    std::vector<std::uint8_t> row;
    for (std::size_t j = offset; j < cells.size(); ++j) {
      if (cells[j] == "0") row.push_back(0);
      else if (cells[j] == "1") row.push_back(1);
      else throw ParseError("incidence cell must be 0 or 1, got '" + cells[j] + "'", line_no);
    }
    m.entities.push_back(labelled ? cells[0] : "e" + std::to_string(m.rows.size() + 1));
    m.rows.push_back(std::move(row));
  }
  if (!header_seen) throw ParseError("incidence file is empty");
  return m;
}

IncidenceMatrix load_incidence_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read incidence file " + path);
  return parse_incidence_csv(in);
}

void write_incidence_csv(const IncidenceMatrix& m, std::ostream& out) {
  out << "entity";
  for (const auto& s : m.sources) out << ',' << s;
  out << '\n';
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    out << m.entities[i];
    for (auto v : m.rows[i]) out << ',' << static_cast<int>(v);
    out << '\n';
  }
}

FrequencyCounts frequency_counts(const IncidenceMatrix& m) {
  if (m.rows.empty()) throw InvalidInput("incidence matrix has no entities");
  FrequencyCounts c;
  c.kind = OccasionKind::Source;
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    std::size_t k = 0;
    for (auto v : m.rows[i]) k += v;
    if (k == 0) throw StructuralError("entity '" + m.entities[i] + "' has no incidences");
    ++c.f[k];
    ++c.s_obs;
  }
  return c;
}

FrequencyCounts frequency_counts(const std::vector<std::set<std::string>>& per_iteration) {
  if (per_iteration.empty()) throw InvalidInput("no capture occasions");
  std::map<std::string, std::size_t> seen;
  for (const auto& occasion : per_iteration)
    for (const auto& e : occasion) ++seen[e];
  if (seen.empty()) throw InvalidInput("no entities observed");
  FrequencyCounts c;
  c.kind = OccasionKind::Iteration;
  for (const auto& [e, k] : seen) {
    ++c.f[k];
    ++c.s_obs;
  }
  return c;
}

CoverageEstimate chao1(std::size_t s_obs, std::size_t f1, std::size_t f2) {
  if (s_obs == 0) throw EstimationError("Chao1 is undefined with no observed entities");
  CoverageEstimate e;
  e.s_obs = s_obs;
  e.f1 = f1;
  e.f2 = f2;
  const double a = static_cast<double>(f1);
  e.s_hat = static_cast<double>(s_obs) +
            (f2 > 0 ? a * a / (2.0 * static_cast<double>(f2)) : a * (a - 1.0) / 2.0);
  e.c_hat = static_cast<double>(s_obs) / e.s_hat;
  return e;
}

CoverageEstimate chao1(const FrequencyCounts& counts) {
  return chao1(counts.s_obs, counts.f1(), counts.f2());
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidInput("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

ConfidenceInterval bootstrap_ci(const IncidenceMatrix& m, std::size_t replicates, double level,
                                std::uint64_t seed) {
  const std::size_t M = m.source_count();
  if (M < 2) throw InvalidInput("bootstrap needs at least two sources");
  if (replicates == 0) throw InvalidInput("bootstrap needs at least one replicate");
  if (!(level > 0.0 && level < 1.0)) throw InvalidInput("confidence level must lie in (0,1)");

  // Column-major copy: resampling picks whole columns.
  std::vector<std::vector<std::uint32_t>> members(M);
  for (std::size_t i = 0; i < m.rows.size(); ++i)
    for (std::size_t j = 0; j < M; ++j)
      if (m.rows[i][j]) members[j].push_back(static_cast<std::uint32_t>(i));

  std::vector<double> estimates;
  estimates.reserve(replicates);
  std::vector<std::uint32_t> hits(m.rows.size());
  for (std::size_t r = 0; r < replicates; ++r) {
    // Hash the seed first so that nearby seeds do not share replicate streams.
    std::mt19937_64 rng(splitmix64(splitmix64(seed) + r));
    std::fill(hits.begin(), hits.end(), 0);
    for (std::size_t draw = 0; draw < M; ++draw) {
      auto col = static_cast<std::size_t>(static_cast<double>(rng() >> 11) * 0x1.0p-53 * M);
      for (auto i : members[std::min(col, M - 1)]) ++hits[i];
    }
    std::size_t s_obs = 0, f1 = 0, f2 = 0;
    for (auto h : hits) {
      if (h == 0) continue;
      ++s_obs;
      f1 += h == 1;
      f2 += h == 2;
    }
    if (s_obs == 0) continue;
    estimates.push_back(chao1(s_obs, f1, f2).s_hat);
  }
  if (estimates.empty()) throw EstimationError("every bootstrap replicate was empty");
  const double tail = (1.0 - level) / 2.0;
  return {quantile(estimates, tail), quantile(estimates, 1.0 - tail), estimates.size()};
}

void StoppingConfig::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0,1)");
  if (delta < 0) throw ConfigError("delta must be non-negative");
  if (consecutive == 0) throw ConfigError("consecutive must be at least 1");
}

std::string_view to_string(StopDecision d) {
  switch (d) {
    case StopDecision::Continue: return "continue";
    case StopDecision::StopCoverage: return "stop_coverage";
    case StopDecision::StopMarginal: return "stop_marginal";
  }
  return "unknown";
}

StopDecision should_stop(const std::vector<double>& coverage,
                         const std::vector<std::size_t>& discovered, const StoppingConfig& config) {
  if (coverage.size() >= config.consecutive &&
      std::all_of(coverage.end() - static_cast<std::ptrdiff_t>(config.consecutive), coverage.end(),
                  [&](double c) { return c > config.tau; }))
    return StopDecision::StopCoverage;
  if (config.delta > 0 && discovered.size() >= 2) {
    long d = static_cast<long>(discovered.back()) - static_cast<long>(discovered[discovered.size() - 2]);
    if (d < config.delta) return StopDecision::StopMarginal;
  }
  return StopDecision::Continue;
}

namespace {

struct MmEval {
  double s_max;
  double rss;
};

MmEval evaluate_mm(const std::vector<CurvePoint>& pts, double k) {
  double num = 0.0, den = 0.0;
  for (auto [n, s] : pts) {
    double g = n / (k + n);
    num += s * g;
    den += g * g;
  }
  double s_max = den > 0 ? num / den : 0.0;
  double rss = 0.0;
  for (auto [n, s] : pts) {
    double r = s - s_max * n / (k + n);
    rss += r * r;
  }
  return {s_max, rss};
}

void check_points(const std::vector<CurvePoint>& points) {
  if (points.size() < 3) throw InvalidInput("curve fitting needs at least three points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].first > 0.0)) throw InvalidInput("effort values must be positive");
    if (i && !(points[i].first > points[i - 1].first))
      throw InvalidInput("effort values must be strictly increasing");
    if (i && points[i].second < points[i - 1].second)
      throw InvalidInput("cumulative counts must be non-decreasing");
  }
}

}  // namespace

AccumulationFit fit_accumulation(const std::vector<CurvePoint>& points) {
  check_points(points);
  if (std::all_of(points.begin(), points.end(), [](const CurvePoint& p) { return p.second == 0.0; }))
    throw EstimationError("cannot fit an accumulation curve to all-zero counts");

  const double lo = std::log(points.front().first / 100.0);
  const double hi = std::log(points.back().first * 100.0);
  constexpr int kGrid = 200;
  std::vector<double> grid(kGrid);
  for (int i = 0; i < kGrid; ++i) grid[i] = lo + (hi - lo) * i / (kGrid - 1);

  int best = 0;
  double best_rss = evaluate_mm(points, std::exp(grid[0])).rss;
  for (int i = 1; i < kGrid; ++i) {
    double rss = evaluate_mm(points, std::exp(grid[i])).rss;
    if (rss < best_rss) best_rss = rss, best = i;
  }

  // Golden-section on log K between the neighbours of the best grid point.
  double a = grid[std::max(best - 1, 0)];
  double b = grid[std::min(best + 1, kGrid - 1)];
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double r1 = evaluate_mm(points, std::exp(x1)).rss, r2 = evaluate_mm(points, std::exp(x2)).rss;
  for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
    if (r1 < r2) {
      b = x2, x2 = x1, r2 = r1;
      x1 = b - phi * (b - a);
      r1 = evaluate_mm(points, std::exp(x1)).rss;
    } else {
      a = x1, x1 = x2, r1 = r2;
      x2 = a + phi * (b - a);
      r2 = evaluate_mm(points, std::exp(x2)).rss;
    }
  }
  double log_k = 0.5 * (a + b);
  MmEval refined = evaluate_mm(points, std::exp(log_k));
  if (refined.rss > best_rss) {
    log_k = grid[best];
    refined = evaluate_mm(points, std::exp(log_k));
  }
  AccumulationFit fit;
  fit.k = std::exp(log_k);
  fit.s_max = refined.s_max;
  fit.rss = refined.rss;
  fit.near_upper_bound = log_k >= grid[kGrid - 2];
  return fit;
}

LinearFit fit_linear(const std::vector<CurvePoint>& points) {
  if (points.size() < 2) throw InvalidInput("linear fit needs at least two points");
  const double n = static_cast<double>(points.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : points) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  LinearFit fit;
  const double den = n * sxx - sx * sx;
  fit.slope = den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
  fit.intercept = (sy - fit.slope * sx) / n;
  for (auto [x, y] : points) {
    double r = y - fit.predict(x);
    fit.rss += r * r;
  }
  return fit;
}

std::vector<CurvePoint> parse_points_csv(std::istream& in) {
  std::vector<CurvePoint> pts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() < 2) throw ParseError("expected two columns", line_no);
    auto num = [](const std::string& s) -> std::optional<double> {
      double v = 0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
      return v;
    };
    auto x = num(cells[0]), y = num(cells[1]);
    if (!x || !y) {
      if (pts.empty() && line_no == 1) continue;  // header
      throw ParseError("non-numeric curve point", line_no);
    }
    pts.emplace_back(*x, *y);
  }
  return pts;
}

double coverage_error(double c_hat, double c_true) { return std::abs(c_hat - c_true); }

}  // namespace wkw

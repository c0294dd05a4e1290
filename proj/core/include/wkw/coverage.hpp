#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace wkw {

enum class OccasionKind { Iteration, Source };

struct FrequencyCounts {
  std::map<std::size_t, std::size_t> f;  // k -> entities seen on exactly k occasions
  std::size_t s_obs = 0;
  OccasionKind kind = OccasionKind::Source;

  std::size_t at(std::size_t k) const {
    auto it = f.find(k);
    return it == f.end() ? 0 : it->second;
  }
  std::size_t f1() const { return at(1); }
  std::size_t f2() const { return at(2); }
};

// Binary entity x source matrix.
struct IncidenceMatrix {
  std::vector<std::string> entities;
  std::vector<std::string> sources;
  std::vector<std::vector<std::uint8_t>> rows;

  std::size_t entity_count() const { return rows.size(); }
  std::size_t source_count() const { return sources.size(); }

  // Sources and entities in sorted order.
  static IncidenceMatrix from_sets(const std::map<std::string, std::set<std::string>>& sources_by_entity);
};

// Header row of source ids; an optional leading "entity" column labels rows.
// Cells must be 0 or 1. Throws ParseError with the line number.
IncidenceMatrix parse_incidence_csv(std::istream& in);
IncidenceMatrix load_incidence_csv(const std::string& path);
void write_incidence_csv(const IncidenceMatrix& m, std::ostream& out);

// Row sums. Throws InvalidInput on an empty matrix and StructuralError on an all-zero row.
FrequencyCounts frequency_counts(const IncidenceMatrix& m);
// Membership counts across per-iteration sets of entity keys.
FrequencyCounts frequency_counts(const std::vector<std::set<std::string>>& per_iteration);

struct CoverageEstimate {
  std::size_t s_obs = 0;
  double s_hat = 0.0;
  double c_hat = 0.0;
  std::size_t f1 = 0;
  std::size_t f2 = 0;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
};

// S_obs + f1^2/(2 f2); when f2 = 0 the bias-corrected S_obs + f1(f1-1)/2.
// Throws EstimationError when s_obs is 0.
CoverageEstimate chao1(std::size_t s_obs, std::size_t f1, std::size_t f2);
CoverageEstimate chao1(const FrequencyCounts& counts);

struct ConfidenceInterval {
  double low = 0.0;
  double high = 0.0;
  std::size_t replicates_used = 0;
};

// Resamples source columns with replacement and takes percentile bounds of
// the per-replicate Chao1 estimates. Throws InvalidInput with fewer than 2
// sources and EstimationError when every replicate is empty.
ConfidenceInterval bootstrap_ci(const IncidenceMatrix& m, std::size_t replicates = 1000,
                                double level = 0.95, std::uint64_t seed = 20240611);

// Linear-interpolation quantile (type 7) of an unsorted sample.
double quantile(std::vector<double> values, double q);

struct StoppingConfig {
  double tau = 0.85;
  long delta = 0;  // 0 disables the marginal rule
  std::size_t consecutive = 2;
  void validate() const;
};

enum class StopDecision { Continue, StopCoverage, StopMarginal };
std::string_view to_string(StopDecision d);

// coverage: C_hat per iteration. discovered: cumulative entity counts.
StopDecision should_stop(const std::vector<double>& coverage,
                         const std::vector<std::size_t>& discovered, const StoppingConfig& config);

struct AccumulationFit {
  double s_max = 0.0;
  double k = 0.0;
  double rss = 0.0;
  bool near_upper_bound = false;  // data looked linear; K hit the search ceiling
  double predict(double n) const { return s_max * n / (k + n); }
};

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double rss = 0.0;
  double predict(double n) const { return intercept + slope * n; }
};

using CurvePoint = std::pair<double, double>;  // (effort n, cumulative S)

// Michaelis-Menten S(n) = S_max n / (K + n) by log-grid search on K with a
// closed-form S_max, then golden-section refinement.
AccumulationFit fit_accumulation(const std::vector<CurvePoint>& points);
LinearFit fit_linear(const std::vector<CurvePoint>& points);

// "n,S" rows with an optional header.
std::vector<CurvePoint> parse_points_csv(std::istream& in);

double coverage_error(double c_hat, double c_true);

}  // namespace wkw

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "flowmut/result.hpp"
#include "flowmut/simulate.hpp"

namespace flowmut {

// ---------------------------------------------------------------------------
// Verdict matrix
// ---------------------------------------------------------------------------

/// Tolerance-comparable summary of one trace: outputs flattened in sorted
/// variable order plus the error position (-1 when the run completed).
struct TraceSignature {
  std::vector<double> samples;
  int error_step = -1;

  static TraceSignature from_trace(const Trace& t) {
    TraceSignature sig;
    for (const auto& [name, seq] : t.outputs) {  // std::map: sorted by name
      (void)name;
      for (const Value& v : seq) {
        sig.samples.push_back(v.is_boolean() ? (v.as_boolean() ? 1.0 : 0.0)
                                             : v.as_number());
      }
    }
    sig.error_step = t.runtime_error ? t.runtime_error->step : -1;
    return sig;
  }

  bool within(const TraceSignature& other, double tol) const {
    if (error_step != other.error_step) return false;
    if (samples.size() != other.samples.size()) return false;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (std::abs(samples[i] - other.samples[i]) > tol) return false;
    }
    return true;
  }
};

struct MutantOutcome {
  std::string id;
  std::vector<bool> killed;              // one flag per test
  std::vector<TraceSignature> traces;    // one signature per test

  bool killed_any() const {
    return std::any_of(killed.begin(), killed.end(), [](bool b) { return b; });
  }
  bool alive_everywhere() const { return !killed_any(); }
};

/// Rectangular mutant x test outcome matrix with traces retained for
/// duplicate detection.
struct VerdictMatrix {
  std::vector<std::string> tests;
  std::vector<MutantOutcome> mutants;
};

// ---------------------------------------------------------------------------
// Duplication, equivalence, quality
// ---------------------------------------------------------------------------

/// Partitions the killed mutants: same kill vector and output traces within
/// tol of the group's first member on every test. Groups preserve matrix
/// order; singletons are groups of one.
inline std::vector<std::vector<std::string>> duplication_groups(
    const VerdictMatrix& matrix, double tol) {
  std::vector<std::vector<std::string>> groups;
  std::vector<const MutantOutcome*> representatives;
  for (const MutantOutcome& m : matrix.mutants) {
    if (!m.killed_any()) continue;
    bool placed = false;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const MutantOutcome& rep = *representatives[g];
      if (rep.killed != m.killed) continue;
      bool same = true;
      for (std::size_t t = 0; t < matrix.tests.size() && same; ++t) {
        same = m.traces[t].within(rep.traces[t], tol);
      }
      if (same) {
        groups[g].push_back(m.id);
        placed = true;
        break;
      }
    }
    if (!placed) {
      groups.push_back({m.id});
      representatives.push_back(&m);
    }
  }
  return groups;
}

/// Mutants alive on every test: potentially equivalent to the original.
/// Confirming true equivalence is manual work outside this toolkit.
inline std::vector<std::string> equivalence_candidates(const VerdictMatrix& matrix) {
  std::vector<std::string> out;
  for (const MutantOutcome& m : matrix.mutants) {
    if (m.alive_everywhere()) out.push_back(m.id);
  }
  return out;
}

struct NoKilledMutants {
  std::string message;
};

/// Per-mutant quality over D = killed non-duplicate mutants (one
/// representative per duplication group):
///   quality(m) = 1 - (sum over tests t killing m of |D_t|) / (|K_m| * |D|)
/// where D_t is the set of D-mutants killed by t and K_m the tests killing
/// m. High quality means few tests without broad kill power detect the
/// mutant. Equivalence candidates score 0. Metric version:
/// quality-reconstruction-v1 (reconstructed from its narrative definition).
struct QualityResult {
  std::map<std::string, double> per_mutant;
  double mean = 0.0;   // over D
  int d_size = 0;
};

inline constexpr const char* kQualityMetricVersion = "quality-reconstruction-v1";

inline Result<QualityResult, NoKilledMutants> mutant_quality(
    const VerdictMatrix& matrix, double tol) {
  auto groups = duplication_groups(matrix, tol);
  if (groups.empty()) {
    return NoKilledMutants{"no killed mutants in the matrix"};
  }
  std::map<std::string, const MutantOutcome*> by_id;
  for (const MutantOutcome& m : matrix.mutants) by_id[m.id] = &m;

  std::vector<const MutantOutcome*> d;
  d.reserve(groups.size());
  for (const auto& group : groups) d.push_back(by_id.at(group.front()));

  const std::size_t n_tests = matrix.tests.size();
  std::vector<int> kills_per_test(n_tests, 0);  // |D_t|
  for (const MutantOutcome* m : d) {
    for (std::size_t t = 0; t < n_tests; ++t) {
      if (m->killed[t]) ++kills_per_test[t];
    }
  }

  QualityResult result;
  result.d_size = static_cast<int>(d.size());
  double total = 0.0;
  for (const MutantOutcome* m : d) {
    long sum_dt = 0;
    int k_m = 0;
    for (std::size_t t = 0; t < n_tests; ++t) {
      if (m->killed[t]) {
        sum_dt += kills_per_test[t];
        ++k_m;
      }
    }
    double quality =
        1.0 - static_cast<double>(sum_dt) /
                  (static_cast<double>(k_m) * static_cast<double>(d.size()));
    result.per_mutant[m->id] = quality;
    total += quality;
  }
  result.mean = total / static_cast<double>(d.size());
  for (const std::string& id : equivalence_candidates(matrix)) {
    result.per_mutant[id] = 0.0;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Cochran sample size
// ---------------------------------------------------------------------------

/// Inverse standard-normal CDF: Acklam's rational approximation polished
/// with one Halley step against erfc, accurate to well below 1e-8.
inline double inverse_normal_cdf(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    double q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement
  constexpr double sqrt_two_pi = 2.506628274631000502;
  double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  double u = e * sqrt_two_pi * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

struct DomainError {
  std::string message;
};

/// n = ceil(z^2 p (1-p) / margin^2), z the two-sided normal quantile for the
/// confidence level (1.959964 at 95%).
inline Result<int, DomainError> cochran_sample_size(double confidence,
                                                    double margin, double p) {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    return DomainError{"confidence must be in (0,1)"};
  }
  if (!(margin > 0.0 && margin < 1.0)) {
    return DomainError{"margin must be in (0,1)"};
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    return DomainError{"proportion must be in [0,1]"};
  }
  double z = inverse_normal_cdf((1.0 + confidence) / 2.0);
  double n = z * z * p * (1.0 - p) / (margin * margin);
  return static_cast<int>(std::ceil(n));
}

// ---------------------------------------------------------------------------
// Campaign aggregation
// ---------------------------------------------------------------------------

struct CellKey {
  std::string model;     // LLM / endpoint name, or "baseline"
  std::string strategy;  // "global", "local" or "baseline"
  std::string prompt;    // "P1".."P4", empty for baseline
  int few_shot = 0;
  double temperature = 0.0;

  friend bool operator<(const CellKey& a, const CellKey& b) {
    return std::tie(a.model, a.strategy, a.prompt, a.few_shot, a.temperature) <
           std::tie(b.model, b.strategy, b.prompt, b.few_shot, b.temperature);
  }
  friend bool operator==(const CellKey& a, const CellKey& b) {
    return a.model == b.model && a.strategy == b.strategy &&
           a.prompt == b.prompt && a.few_shot == b.few_shot &&
           a.temperature == b.temperature;
  }
};

/// Everything one campaign cell contributes to the metric suite.
struct CellData {
  CellKey key;
  int requests = 0;
  int requested = 0;       // mutants asked for
  int parse_failures = 0;  // JSON values that were not schema-valid proposals
  int proposals = 0;       // schema-valid parsed proposals
  int generable = 0;
  int compiled = 0;
  double latency_total_s = 0.0;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  double cost = 0.0;
  VerdictMatrix matrix;  // executed (compiled) mutants only
};

struct MetricsCell {
  CellKey key;
  int requests = 0;
  int requested = 0;
  int parse_failures = 0;
  int proposals = 0;
  int generable = 0;
  int compiled = 0;
  int killed = 0;
  int duplicates = 0;              // sum of (|group|-1)
  int equivalent_candidates = 0;
  std::optional<double> mutant_count;    // proposals / requested
  std::optional<double> generability;    // generable / proposals
  std::optional<double> compilability;   // compiled / generable
  std::optional<double> duplication;     // duplicates / compiled
  std::optional<double> equivalent;      // candidates / compiled
  std::optional<double> quality;         // mean over killed non-duplicates
  std::optional<double> time_s;          // latency_total / proposals
  double cost = 0.0;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  double latency_total_s = 0.0;
};

/// Denominator conventions, also embedded in every exported report:
/// generability over parsed proposals, compilability over generable mutants,
/// duplication and equivalence over compiled mutants, quality over killed
/// non-duplicates, per-mutant time over parsed proposals.
inline constexpr const char* kMetricDenominators =
    "mutant_count=proposals/requested; generability=generable/proposals; "
    "compilability=compiled/generable; duplication=duplicates/compiled; "
    "equivalent=alive_on_all_tests/compiled; quality=mean over killed "
    "non-duplicate mutants; time_s=latency/proposals; cost=tokens*prices";

struct MetricsReport {
  std::vector<MetricsCell> cells;  // sorted by key
  MetricsCell totals;
};

namespace detail {

inline std::optional<double> ratio(double num, double den) {
  if (den == 0.0) return std::nullopt;
  return num / den;
}

inline MetricsCell metrics_from_cell(const CellData& cell, double tol) {
  MetricsCell m;
  m.key = cell.key;
  m.requests = cell.requests;
  m.requested = cell.requested;
  m.parse_failures = cell.parse_failures;
  m.proposals = cell.proposals;
  m.generable = cell.generable;
  m.compiled = cell.compiled;
  m.cost = cell.cost;
  m.prompt_tokens = cell.prompt_tokens;
  m.completion_tokens = cell.completion_tokens;
  m.latency_total_s = cell.latency_total_s;

  auto groups = duplication_groups(cell.matrix, tol);
  for (const auto& g : groups) {
    m.killed += static_cast<int>(g.size());
    m.duplicates += static_cast<int>(g.size()) - 1;
  }
  m.equivalent_candidates =
      static_cast<int>(equivalence_candidates(cell.matrix).size());

  m.mutant_count = ratio(cell.proposals, cell.requested);
  m.generability = ratio(cell.generable, cell.proposals);
  m.compilability = ratio(cell.compiled, cell.generable);
  m.duplication = ratio(m.duplicates, cell.compiled);
  m.equivalent = ratio(m.equivalent_candidates, cell.compiled);
  auto quality = mutant_quality(cell.matrix, tol);
  if (quality.ok()) m.quality = quality.value().mean;
  m.time_s = ratio(cell.latency_total_s, cell.proposals);
  return m;
}

inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace detail

/// Aggregates per-cell results plus a pooled totals row. The totals row
/// recomputes duplication, equivalence and quality over the union of all
/// executed mutants (same chart, same suite, so pooling is well defined).
inline MetricsReport aggregate(std::vector<CellData> cells, double tol) {
  std::sort(cells.begin(), cells.end(),
            [](const CellData& a, const CellData& b) { return a.key < b.key; });
  MetricsReport report;
  CellData pooled;
  pooled.key = CellKey{"TOTAL", "", "", 0, 0.0};
  for (const CellData& cell : cells) {
    report.cells.push_back(detail::metrics_from_cell(cell, tol));
    pooled.requests += cell.requests;
    pooled.requested += cell.requested;
    pooled.parse_failures += cell.parse_failures;
    pooled.proposals += cell.proposals;
    pooled.generable += cell.generable;
    pooled.compiled += cell.compiled;
    pooled.latency_total_s += cell.latency_total_s;
    pooled.prompt_tokens += cell.prompt_tokens;
    pooled.completion_tokens += cell.completion_tokens;
    pooled.cost += cell.cost;
    if (pooled.matrix.tests.empty()) pooled.matrix.tests = cell.matrix.tests;
    for (const MutantOutcome& m : cell.matrix.mutants) {
      pooled.matrix.mutants.push_back(m);
    }
  }
  report.totals = detail::metrics_from_cell(pooled, tol);
  return report;
}

inline nlohmann::ordered_json metrics_cell_to_json(const MetricsCell& m) {
  nlohmann::ordered_json j;
  j["model"] = m.key.model;
  j["strategy"] = m.key.strategy;
  j["prompt"] = m.key.prompt;
  j["few_shot"] = m.key.few_shot;
  j["temperature"] = m.key.temperature;
  j["requests"] = m.requests;
  j["requested"] = m.requested;
  j["parse_failures"] = m.parse_failures;
  j["proposals"] = m.proposals;
  j["generable"] = m.generable;
  j["compiled"] = m.compiled;
  j["killed"] = m.killed;
  j["duplicates"] = m.duplicates;
  j["equivalent_candidates"] = m.equivalent_candidates;
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  j["mutant_count"] = opt(m.mutant_count);
  j["generability"] = opt(m.generability);
  j["compilability"] = opt(m.compilability);
  j["duplication"] = opt(m.duplication);
  j["equivalent"] = opt(m.equivalent);
  j["quality"] = opt(m.quality);
  j["time_s"] = opt(m.time_s);
  j["cost"] = m.cost;
  j["prompt_tokens"] = m.prompt_tokens;
  j["completion_tokens"] = m.completion_tokens;
  j["latency_total_s"] = m.latency_total_s;
  return j;
}

inline nlohmann::ordered_json metrics_report_to_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["denominators"] = kMetricDenominators;
  j["quality_metric_version"] = kQualityMetricVersion;
  j["cells"] = nlohmann::ordered_json::array();
  for (const MetricsCell& m : report.cells) {
    j["cells"].push_back(metrics_cell_to_json(m));
  }
  j["totals"] = metrics_cell_to_json(report.totals);
  return j;
}

/// One row per campaign cell plus a TOTAL row; undefined metrics render as
/// empty cells. Column order matches the standard effectiveness/efficiency
/// table layout.
inline std::string metrics_report_to_csv(const MetricsReport& report) {
  std::string out =
      "model,strategy,prompt,few_shot,temperature,requested,proposals,"
      "generable,compiled,mutant_count,generability,compilability,"
      "duplication,equivalent,quality,time_s,cost\n";
  auto opt = [](const std::optional<double>& v) {
    return v ? detail::format_double(*v) : std::string{};
  };
  auto row = [&](const MetricsCell& m) {
    out += m.key.model + "," + m.key.strategy + "," + m.key.prompt + "," +
           std::to_string(m.key.few_shot) + "," +
           detail::format_double(m.key.temperature) + "," +
           std::to_string(m.requested) + "," + std::to_string(m.proposals) +
           "," + std::to_string(m.generable) + "," + std::to_string(m.compiled) +
           "," + opt(m.mutant_count) + "," + opt(m.generability) + "," +
           opt(m.compilability) + "," + opt(m.duplication) + "," +
           opt(m.equivalent) + "," + opt(m.quality) + "," + opt(m.time_s) +
           "," + detail::format_double(m.cost) + "\n";
  };
  for (const MetricsCell& m : report.cells) row(m);
  row(report.totals);
  return out;
}

}  // namespace flowmut

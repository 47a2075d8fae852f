// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numeric>

#include "doctest.h"

#include "flowmut/analysis.hpp"
#include "flowmut/rng.hpp"

using namespace flowmut;

namespace {

TraceSignature sig(std::initializer_list<double> samples, int error_step = -1) {
  TraceSignature s;
  s.samples = samples;
  s.error_step = error_step;
  return s;
}

/// Builds a matrix from kill flags and small integer trace labels: mutants
/// with the same label on a test behave identically there.
VerdictMatrix make_matrix(int n_tests,
                          const std::vector<std::vector<bool>>& kills,
                          const std::vector<std::vector<int>>& trace_labels) {
  VerdictMatrix m;
  for (int t = 0; t < n_tests; ++t) m.tests.push_back("t" + std::to_string(t));
  for (std::size_t i = 0; i < kills.size(); ++i) {
    MutantOutcome mo;
    mo.id = "m" + std::to_string(i);
    mo.killed = kills[i];
    for (int t = 0; t < n_tests; ++t) {
      mo.traces.push_back(sig({static_cast<double>(trace_labels[i][t])}));
    }
    m.mutants.push_back(std::move(mo));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Brute-force references, written straight from the definitions and kept
// independent of the library implementation.
// ---------------------------------------------------------------------------

bool bf_duplicates(const VerdictMatrix& m, std::size_t a, std::size_t b, double tol) {
  if (m.mutants[a].killed != m.mutants[b].killed) return false;
  for (std::size_t t = 0; t < m.tests.size(); ++t) {
    const auto& ta = m.mutants[a].traces[t];
    const auto& tb = m.mutants[b].traces[t];
    if (ta.error_step != tb.error_step) return false;
    if (ta.samples.size() != tb.samples.size()) return false;
    for (std::size_t i = 0; i < ta.samples.size(); ++i) {
      if (std::abs(ta.samples[i] - tb.samples[i]) > tol) return false;
    }
  }
  return true;
}

std::vector<std::vector<std::string>> bf_duplication_groups(const VerdictMatrix& m,
                                                            double tol) {
  // union-find over the pairwise duplicate relation, restricted to killed
  std::vector<std::size_t> killed_idx;
  for (std::size_t i = 0; i < m.mutants.size(); ++i) {
    if (m.mutants[i].killed_any()) killed_idx.push_back(i);
  }
  std::vector<std::size_t> parent(killed_idx.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  };
  for (std::size_t i = 0; i < killed_idx.size(); ++i) {
    for (std::size_t j = i + 1; j < killed_idx.size(); ++j) {
      if (bf_duplicates(m, killed_idx[i], killed_idx[j], tol)) {
        parent[find(j)] = find(i);
      }
    }
  }
  std::map<std::size_t, std::vector<std::string>> by_root;
  for (std::size_t i = 0; i < killed_idx.size(); ++i) {
    by_root[find(i)].push_back(m.mutants[killed_idx[i]].id);
  }
  std::vector<std::vector<std::string>> out;
  for (auto& [root, ids] : by_root) out.push_back(ids);
  // order groups by first member's appearance, matching the library contract
  std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
    auto pos = [&](const std::string& id) {
      for (std::size_t i = 0; i < m.mutants.size(); ++i) {
        if (m.mutants[i].id == id) return i;
      }
      return m.mutants.size();
    };
    return pos(a.front()) < pos(b.front());
  });
  return out;
}

std::map<std::string, double> bf_quality(const VerdictMatrix& m, double tol) {
  auto groups = bf_duplication_groups(m, tol);
  std::vector<std::string> d;
  for (const auto& g : groups) d.push_back(g.front());
  auto outcome_of = [&](const std::string& id) -> const MutantOutcome& {
    for (const auto& mo : m.mutants) {
      if (mo.id == id) return mo;
    }
    throw std::runtime_error("missing mutant");
  };
  std::map<std::string, double> out;
  for (const std::string& id : d) {
    const MutantOutcome& mo = outcome_of(id);
    double sum = 0;
    int k_m = 0;
    for (std::size_t t = 0; t < m.tests.size(); ++t) {
      if (!mo.killed[t]) continue;
      ++k_m;
      int d_t = 0;
      for (const std::string& other : d) {
        if (outcome_of(other).killed[t]) ++d_t;
      }
      sum += d_t;
    }
    out[id] = 1.0 - sum / (static_cast<double>(k_m) * static_cast<double>(d.size()));
  }
  return out;
}

}  // namespace

TEST_CASE("duplication groups follow kill vectors then traces") {
  // two mutants with identical kill vectors and traces, a third with the
  // same kill vector but a different trace on test 2
  auto m = make_matrix(3,
                       {{true, false, true},
                        {true, false, true},
                        {true, false, true},
                        {false, false, false}},
                       {{1, 0, 5}, {1, 0, 5}, {1, 0, 7}, {0, 0, 0}});
  auto groups = duplication_groups(m, 1e-9);
  REQUIRE(groups.size() == 2);
  CHECK(groups[0] == std::vector<std::string>{"m0", "m1"});
  CHECK(groups[1] == std::vector<std::string>{"m2"});
}

TEST_CASE("behaviorally distinct mutants give singleton groups") {
  auto m = make_matrix(2, {{true, false}, {false, true}, {true, true}},
                       {{1, 0}, {0, 1}, {1, 1}});
  auto groups = duplication_groups(m, 1e-9);
  CHECK(groups.size() == 3);
  int duplicates = 0;
  for (const auto& g : groups) duplicates += static_cast<int>(g.size()) - 1;
  CHECK(duplicates == 0);
}

TEST_CASE("N exact copies produce duplication (N-1)/N") {
  const int n = 6;
  std::vector<std::vector<bool>> kills(n, {true});
  std::vector<std::vector<int>> traces(n, {3});
  auto m = make_matrix(1, kills, traces);
  auto groups = duplication_groups(m, 1e-9);
  REQUIRE(groups.size() == 1);
  CHECK(groups[0].size() == n);
  double rate = double(n - 1) / n;
  CHECK(rate == doctest::Approx(5.0 / 6.0));
}

TEST_CASE("equivalence candidates are the all-alive mutants") {
  auto m = make_matrix(2, {{false, false}, {true, false}, {false, false}},
                       {{0, 0}, {1, 0}, {0, 0}});
  auto candidates = equivalence_candidates(m);
  CHECK(candidates == std::vector<std::string>{"m0", "m2"});
}

TEST_CASE("quality matches the worked example") {
  // D = {m0, m1, m2}; t0 kills only m0, t1 kills m1 and m2
  auto m = make_matrix(2, {{true, false}, {false, true}, {false, true}},
                       {{1, 0}, {0, 2}, {0, 3}});
  auto q = mutant_quality(m, 1e-9);
  REQUIRE(q.ok());
  CHECK(q.value().d_size == 3);
  CHECK(q.value().per_mutant.at("m0") == doctest::Approx(2.0 / 3.0));
  CHECK(q.value().per_mutant.at("m1") == doctest::Approx(1.0 / 3.0));
  CHECK(q.value().per_mutant.at("m2") == doctest::Approx(1.0 / 3.0));
  CHECK(q.value().mean == doctest::Approx((2.0 / 3.0 + 1.0 / 3.0 + 1.0 / 3.0) / 3.0));
}

TEST_CASE("quality degenerate cases") {
  // single killed mutant, single test: the only test kills all of D
  auto single = make_matrix(1, {{true}}, {{1}});
  auto q1 = mutant_quality(single, 1e-9);
  REQUIRE(q1.ok());
  CHECK(q1.value().per_mutant.at("m0") == doctest::Approx(0.0));

  // every test kills every mutant (distinct traces so nothing is duplicate)
  auto all = make_matrix(2, {{true, true}, {true, true}, {true, true}},
                         {{1, 1}, {2, 2}, {3, 3}});
  auto q2 = mutant_quality(all, 1e-9);
  REQUIRE(q2.ok());
  for (const auto& [id, quality] : q2.value().per_mutant) {
    CAPTURE(id);
    CHECK(quality == doctest::Approx(0.0));
  }

  // equivalence candidates score zero
  auto with_alive = make_matrix(1, {{true}, {false}}, {{1}, {0}});
  auto q3 = mutant_quality(with_alive, 1e-9);
  REQUIRE(q3.ok());
  CHECK(q3.value().per_mutant.at("m1") == 0.0);

  // no killed mutants at all
  auto none = make_matrix(1, {{false}}, {{0}});
  CHECK(!mutant_quality(none, 1e-9).ok());
}

TEST_CASE("quality values stay in [0,1] and duplicates do not distort them") {
  Rng rng(321);
  for (int iter = 0; iter < 300; ++iter) {
    int n_tests = 1 + static_cast<int>(rng.index(4));
    int n_mutants = 1 + static_cast<int>(rng.index(6));
    std::vector<std::vector<bool>> kills;
    std::vector<std::vector<int>> traces;
    for (int i = 0; i < n_mutants; ++i) {
      std::vector<bool> k;
      std::vector<int> tr;
      for (int t = 0; t < n_tests; ++t) {
        bool killed = rng.coin();
        k.push_back(killed);
        tr.push_back(killed ? 1 + static_cast<int>(rng.index(3)) : 0);
      }
      kills.push_back(k);
      traces.push_back(tr);
    }
    auto m = make_matrix(n_tests, kills, traces);
    auto groups = duplication_groups(m, 1e-9);

    // partition property: group sizes sum to the number of killed mutants
    int killed_count = 0;
    for (const auto& mo : m.mutants) killed_count += mo.killed_any() ? 1 : 0;
    int group_total = 0;
    for (const auto& g : groups) group_total += static_cast<int>(g.size());
    REQUIRE(group_total == killed_count);

    auto q = mutant_quality(m, 1e-9);
    if (!q.ok()) continue;
    for (const auto& [id, quality] : q.value().per_mutant) {
      CAPTURE(id);
      REQUIRE(quality >= 0.0);
      REQUIRE(quality <= 1.0);
    }

    // removing all-but-one member of each duplication group leaves every
    // remaining quality unchanged (D is defined over representatives)
    VerdictMatrix reduced;
    reduced.tests = m.tests;
    std::set<std::string> keep;
    for (const auto& g : groups) keep.insert(g.front());
    for (const auto& mo : m.mutants) {
      if (keep.count(mo.id) > 0) reduced.mutants.push_back(mo);
    }
    auto q_reduced = mutant_quality(reduced, 1e-9);
    REQUIRE(q_reduced.ok());
    for (const std::string& id : keep) {
      REQUIRE(q_reduced.value().per_mutant.at(id) ==
              doctest::Approx(q.value().per_mutant.at(id)));
    }
  }
}

TEST_CASE("library implementation agrees with the brute-force reference") {
  Rng rng(777);
  for (int iter = 0; iter < 500; ++iter) {
    int n_tests = 1 + static_cast<int>(rng.index(4));
    int n_mutants = 1 + static_cast<int>(rng.index(6));
    std::vector<std::vector<bool>> kills;
    std::vector<std::vector<int>> traces;
    for (int i = 0; i < n_mutants; ++i) {
      std::vector<bool> k;
      std::vector<int> tr;
      for (int t = 0; t < n_tests; ++t) {
        bool killed = rng.coin();
        k.push_back(killed);
        tr.push_back(static_cast<int>(rng.index(3)));
      }
      kills.push_back(k);
      traces.push_back(tr);
    }
    auto m = make_matrix(n_tests, kills, traces);
    CAPTURE(iter);
    CHECK(duplication_groups(m, 1e-9) == bf_duplication_groups(m, 1e-9));
    auto q = mutant_quality(m, 1e-9);
    auto bq = bf_quality(m, 1e-9);
    if (!q.ok()) {
      CHECK(bq.empty());
      continue;
    }
    for (const auto& [id, quality] : bq) {
      REQUIRE(q.value().per_mutant.at(id) == doctest::Approx(quality));
    }
  }
}

TEST_CASE("inverse normal quantile is accurate") {
  CHECK(inverse_normal_cdf(0.975) == doctest::Approx(1.959963985).epsilon(1e-8));
  CHECK(inverse_normal_cdf(0.5) == doctest::Approx(0.0));
  CHECK(inverse_normal_cdf(0.995) == doctest::Approx(2.5758293035).epsilon(1e-8));
  CHECK(inverse_normal_cdf(0.9999) == doctest::Approx(3.7190164872).epsilon(1e-8));
  CHECK(inverse_normal_cdf(0.025) == doctest::Approx(-1.959963985).epsilon(1e-8));
}

TEST_CASE("cochran sample sizes") {
  CHECK(cochran_sample_size(0.95, 0.05, 0.2).value() == 246);
  CHECK(cochran_sample_size(0.95, 0.05, 0.5).value() == 385);
  CHECK(cochran_sample_size(0.95, 0.05, 0.0).value() == 0);
  CHECK(cochran_sample_size(0.95, 0.05, 1.0).value() == 0);
  CHECK(cochran_sample_size(0.99, 0.01, 0.5).value() == 16588);

  CHECK(!cochran_sample_size(0.0, 0.05, 0.2).ok());
  CHECK(!cochran_sample_size(1.0, 0.05, 0.2).ok());
  CHECK(!cochran_sample_size(0.95, 0.0, 0.2).ok());
  CHECK(!cochran_sample_size(0.95, 1.5, 0.2).ok());
  CHECK(!cochran_sample_size(0.95, 0.05, -0.1).ok());
  CHECK(!cochran_sample_size(0.95, 0.05, 1.1).ok());
}

TEST_CASE("aggregate computes the documented ratios") {
  CellData cell;
  cell.key = {"mock", "global", "P1", 0, 0.7};
  cell.requests = 1;
  cell.requested = 25;
  cell.proposals = 24;
  cell.parse_failures = 1;
  cell.generable = 23;
  cell.compiled = 20;
  cell.latency_total_s = 12.0;
  cell.prompt_tokens = 1000;
  cell.completion_tokens = 500;
  cell.cost = 0.25;
  cell.matrix.tests = {"t0"};
  for (int i = 0; i < 20; ++i) {
    MutantOutcome mo;
    mo.id = "m" + std::to_string(i);
    mo.killed = {i % 2 == 0};
    mo.traces = {sig({static_cast<double>(i)})};
    cell.matrix.mutants.push_back(mo);
  }

  auto report = aggregate({cell}, 1e-9);
  REQUIRE(report.cells.size() == 1);
  const MetricsCell& m = report.cells[0];
  CHECK(*m.mutant_count == doctest::Approx(0.96));
  CHECK(*m.generability == doctest::Approx(23.0 / 24.0));  // 0.958...
  CHECK(*m.compilability == doctest::Approx(20.0 / 23.0));  // 0.869...
  CHECK(*m.time_s == doctest::Approx(0.5));
  CHECK(m.cost == doctest::Approx(0.25));
  CHECK(*m.equivalent == doctest::Approx(10.0 / 20.0));
  CHECK(report.totals.requested == 25);
}

TEST_CASE("empty campaigns report undefined metrics, never NaN") {
  CellData cell;
  cell.key = {"mock", "global", "P1", 0, 0.2};
  auto report = aggregate({cell}, 1e-9);
  const MetricsCell& m = report.cells[0];
  CHECK(!m.mutant_count.has_value());
  CHECK(!m.generability.has_value());
  CHECK(!m.compilability.has_value());
  CHECK(!m.duplication.has_value());
  CHECK(!m.quality.has_value());

  auto j = metrics_cell_to_json(m);
  CHECK(j["generability"].is_null());
  std::string csv = metrics_report_to_csv(report);
  CHECK(csv.find(",,") != std::string::npos);  // empty cells, not nan
  CHECK(csv.find("nan") == std::string::npos);
}

TEST_CASE("csv layout is stable and row-per-cell") {
  CellData a;
  a.key = {"mock", "global", "P1", 0, 0.2};
  a.requested = 5;
  a.proposals = 5;
  a.generable = 5;
  a.compiled = 5;
  CellData b;
  b.key = {"mock", "local", "P4", 6, 0.7};
  b.requested = 5;
  b.proposals = 4;
  b.generable = 4;
  b.compiled = 3;
  auto report = aggregate({b, a}, 1e-9);  // intentionally unsorted input
  std::string csv = metrics_report_to_csv(report);
  auto first_line = csv.substr(0, csv.find('\n'));
  CHECK(first_line ==
        "model,strategy,prompt,few_shot,temperature,requested,proposals,"
        "generable,compiled,mutant_count,generability,compilability,"
        "duplication,equivalent,quality,time_s,cost");
  // sorted: global row before local row, TOTAL last
  auto global_pos = csv.find("mock,global");
  auto local_pos = csv.find("mock,local");
  auto total_pos = csv.find("TOTAL");
  CHECK(global_pos < local_pos);
  CHECK(local_pos < total_pos);
}

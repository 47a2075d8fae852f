// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include "flowmut/baseline.hpp"
#include "flowmut/chart_json.hpp"
#include "flowmut/simulate.hpp"
#include "flowmut/suite_json.hpp"
#include "support.hpp"

using namespace flowmut;
using testsupport::asset;
using testsupport::load_chart;
using testsupport::read_file;

namespace {

struct CorpusEntry {
  const char* name;
  int inputs;
  int outputs;
  int states;
  int transitions;
};

// desk-scale equivalents of the four case-study systems
constexpr CorpusEntry kCorpus[] = {
    {"door", 6, 1, 5, 10},
    {"fridge", 3, 3, 4, 8},
    {"elevator", 1, 3, 5, 12},
    {"pacemaker", 12, 15, 11, 17},
};

}  // namespace

TEST_CASE("corpus charts have the documented shapes and validate cleanly") {
  for (const CorpusEntry& entry : kCorpus) {
    CAPTURE(entry.name);
    Chart chart = load_chart(std::string("charts/") + entry.name + ".chart.json");
    int inputs = 0;
    int outputs = 0;
    for (const Variable& v : chart.variables) {
      if (v.kind == VarKind::Input) ++inputs;
      if (v.kind == VarKind::Output) ++outputs;
    }
    CHECK(inputs == entry.inputs);
    CHECK(outputs == entry.outputs);
    CHECK(static_cast<int>(chart.states.size()) == entry.states);
    CHECK(static_cast<int>(chart.transitions.size()) == entry.transitions);
    CHECK(validate_chart(chart).compilable());
  }
}

TEST_CASE("corpus suites reach at least 95% decision and 100% execution coverage") {
  for (const CorpusEntry& entry : kCorpus) {
    CAPTURE(entry.name);
    Chart chart = load_chart(std::string("charts/") + entry.name + ".chart.json");
    auto suite = parse_suite(
        read_file(asset(std::string("suites/") + entry.name + ".suite.json")));
    REQUIRE(suite.ok());
    REQUIRE(validate_suite(chart, suite.value()).empty());
    CoverageReport report = coverage(chart, suite.value().tests);
    CHECK(report.decision_coverage >= 0.95);
    CHECK(report.execution_coverage == doctest::Approx(1.0));
  }
}

TEST_CASE("corpus charts round-trip through the canonical serialization") {
  for (const CorpusEntry& entry : kCorpus) {
    CAPTURE(entry.name);
    Chart chart = load_chart(std::string("charts/") + entry.name + ".chart.json");
    auto back = parse_chart(serialize_chart(chart));
    REQUIRE(back.ok());
    CHECK(back.value() == chart);
  }
}

TEST_CASE("suites kill every first-order baseline mutant sample or leave candidates") {
  // No threshold asserted here; this documents that the corpus is usable
  // for mutation analysis: a sample of baseline mutants yields both killed
  // and surviving mutants overall.
  int killed_total = 0;
  int alive_total = 0;
  for (const CorpusEntry& entry : kCorpus) {
    Chart chart = load_chart(std::string("charts/") + entry.name + ".chart.json");
    auto suite = parse_suite(
        read_file(asset(std::string("suites/") + entry.name + ".suite.json")));
    REQUIRE(suite.ok());
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      auto mutant = generate_baseline(chart, seed, true);
      auto v = verdicts(chart, mutant.mutant, suite.value().tests,
                        suite.value().tolerance);
      bool killed = false;
      for (auto verdict : v) killed = killed || verdict == TestVerdict::Killed;
      (killed ? killed_total : alive_total) += 1;
    }
  }
  CHECK(killed_total > 60);  // the suites detect most sampled mutants
  CHECK(alive_total > 0);    // and some mutants survive (candidates exist)
}

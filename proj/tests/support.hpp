// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "flowmut/chart.hpp"
#include "flowmut/chart_json.hpp"
#include "flowmut/rng.hpp"

namespace testsupport {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string asset(const std::string& rel) {
  return std::string(FLOWMUT_ASSET_DIR) + "/" + rel;
}

inline flowmut::Chart load_chart(const std::string& rel_asset) {
  auto r = flowmut::parse_chart(read_file(asset(rel_asset)));
  if (!r.ok()) {
    throw std::runtime_error("fixture chart failed to parse: " + rel_asset +
                             ": " + r.error().message);
  }
  return std::move(r.value());
}

/// Minimal valid chart: one state, the default transition, one output.
inline flowmut::Chart minimal_chart() {
  using namespace flowmut;
  Chart c;
  c.name = "minimal";
  c.variables.push_back({"OUT", VarKind::Output, ValueType::Number, Value::number(0)});
  c.states.push_back({"S1", "S1", {}, {}, {}});
  Transition t;
  t.id = "T1";
  t.source = TransitionSource::def();
  t.dest = "S1";
  t.priority = 1;
  c.transitions.push_back(t);
  return c;
}

/// Seeded generator of structurally and semantically valid charts, used for
/// round-trip and mutation properties.
inline flowmut::Chart random_chart(flowmut::Rng& rng, int n_states = 0,
                                   int n_transitions = 0) {
  using namespace flowmut;
  Chart c;
  c.name = "gen";
  if (n_states == 0) n_states = 2 + static_cast<int>(rng.index(6));
  int n_junctions = static_cast<int>(rng.index(3));
  if (n_transitions == 0) {
    n_transitions = n_states + static_cast<int>(rng.index(8));
  }

  int n_inputs = 1 + static_cast<int>(rng.index(3));
  int n_outputs = 1 + static_cast<int>(rng.index(3));
  int n_locals = static_cast<int>(rng.index(3));
  std::vector<std::string> numeric_vars, bool_inputs, writable_numeric;
  for (int i = 0; i < n_inputs; ++i) {
    std::string name = "IN" + std::to_string(i);
    if (rng.coin()) {
      c.variables.push_back({name, VarKind::Input, ValueType::Number,
                             Value::number(static_cast<double>(rng.index(5)))});
      numeric_vars.push_back(name);
    } else {
      c.variables.push_back({name, VarKind::Input, ValueType::Boolean,
                             Value::boolean(rng.coin())});
      bool_inputs.push_back(name);
    }
  }
  for (int i = 0; i < n_outputs; ++i) {
    std::string name = "OUT" + std::to_string(i);
    c.variables.push_back({name, VarKind::Output, ValueType::Number,
                           Value::number(static_cast<double>(rng.index(5)))});
    numeric_vars.push_back(name);
    writable_numeric.push_back(name);
  }
  for (int i = 0; i < n_locals; ++i) {
    std::string name = "LOC" + std::to_string(i);
    c.variables.push_back({name, VarKind::Local, ValueType::Number,
                           Value::number(static_cast<double>(rng.index(5)))});
    numeric_vars.push_back(name);
    writable_numeric.push_back(name);
  }

  auto random_stmt = [&]() {
    const std::string& target = writable_numeric[rng.index(writable_numeric.size())];
    const std::string& read = numeric_vars[rng.index(numeric_vars.size())];
    switch (rng.index(3)) {
      case 0: return target + " = " + std::to_string(rng.index(10));
      case 1: return target + " = " + read + " + 1";
      default: return target + " = " + read + " * 2";
    }
  };
  auto random_condition = [&]() -> std::string {
    const std::string& read = numeric_vars[rng.index(numeric_vars.size())];
    const char* ops[] = {"==", "!=", "<", "<=", ">", ">="};
    return read + " " + ops[rng.index(6)] + " " + std::to_string(rng.index(6));
  };

  for (int i = 0; i < n_states; ++i) {
    State s;
    s.id = "S" + std::to_string(i);
    s.name = "STATE" + std::to_string(i);
    for (std::size_t k = 0; k < rng.index(3); ++k) s.entry.push_back(random_stmt());
    for (std::size_t k = 0; k < rng.index(2); ++k) s.during.push_back(random_stmt());
    for (std::size_t k = 0; k < rng.index(2); ++k) s.exit.push_back(random_stmt());
    c.states.push_back(std::move(s));
  }
  for (int i = 0; i < n_junctions; ++i) c.junctions.push_back({"J" + std::to_string(i)});

  Transition def;
  def.id = "T0";
  def.source = TransitionSource::def();
  def.dest = "S0";
  def.priority = 1;
  c.transitions.push_back(def);

  std::map<std::string, int> next_priority;
  for (int i = 1; i < n_transitions; ++i) {
    Transition t;
    t.id = "T" + std::to_string(i);
    // Junction -> junction edges only from lower to higher index keeps the
    // junction graph acyclic by construction.
    bool from_junction = n_junctions > 0 && rng.index(4) == 0;
    int source_junction = -1;
    if (from_junction) {
      source_junction = static_cast<int>(rng.index(static_cast<std::size_t>(n_junctions)));
      t.source = TransitionSource::element("J" + std::to_string(source_junction));
    } else {
      t.source = TransitionSource::element(
          "S" + std::to_string(rng.index(static_cast<std::size_t>(n_states))));
    }
    bool to_junction = n_junctions > 0 && rng.index(5) == 0 &&
                       (!from_junction || source_junction + 1 < n_junctions);
    if (to_junction) {
      int lo = from_junction ? source_junction + 1 : 0;
      t.dest = "J" + std::to_string(lo + static_cast<int>(rng.index(
                         static_cast<std::size_t>(n_junctions - lo))));
    } else {
      t.dest = "S" + std::to_string(rng.index(static_cast<std::size_t>(n_states)));
    }
    std::string source_key = t.source.id;
    t.priority = ++next_priority[source_key];
    if (rng.index(3) != 0) t.condition = random_condition();
    if (!bool_inputs.empty() && rng.index(4) == 0) {
      t.event = bool_inputs[rng.index(bool_inputs.size())];
    }
    for (std::size_t k = 0; k < rng.index(2); ++k) {
      t.condition_action.push_back(random_stmt());
    }
    for (std::size_t k = 0; k < rng.index(2); ++k) {
      t.transition_action.push_back(random_stmt());
    }
    c.transitions.push_back(std::move(t));
  }

  // canonical order, matching serialize_chart
  std::sort(c.variables.begin(), c.variables.end(),
            [](const Variable& a, const Variable& b) { return a.name < b.name; });
  std::sort(c.states.begin(), c.states.end(),
            [](const State& a, const State& b) { return a.id < b.id; });
  std::sort(c.junctions.begin(), c.junctions.end(),
            [](const Junction& a, const Junction& b) { return a.id < b.id; });
  std::sort(c.transitions.begin(), c.transitions.end(),
            [](const Transition& a, const Transition& b) { return a.id < b.id; });
  return c;
}

}  // namespace testsupport

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flowmut/expr.hpp"
#include "flowmut/value.hpp"

namespace flowmut {

enum class ElementKind : std::uint8_t { State, Transition };

inline const char* to_string(ElementKind k) {
  return k == ElementKind::State ? "state" : "transition";
}

/// Declared chart signal or local variable.
struct Variable {
  std::string name;
  VarKind kind = VarKind::Local;
  ValueType type = ValueType::Number;
  Value initial;
};

/// A state with its three action slots. Action strings are statement lists
/// in the mini-language grammar.
struct State {
  std::string id;
  std::string name;
  std::vector<std::string> entry;
  std::vector<std::string> during;
  std::vector<std::string> exit;
};

/// Connective node that splits or merges transition paths without holding
/// state.
struct Junction {
  std::string id;
};

/// Where a transition starts: the sourceless default transition, a concrete
/// element, or nothing (a mutation dropped the source; always invalid but
/// representable so the validator can classify it).
struct TransitionSource {
  enum class Kind : std::uint8_t { Default, Element, Missing };
  Kind kind = Kind::Element;
  std::string id;  // set iff kind == Element

  static TransitionSource def() { return {Kind::Default, {}}; }
  static TransitionSource element(std::string id) {
    return {Kind::Element, std::move(id)};
  }
  static TransitionSource missing() { return {Kind::Missing, {}}; }

  bool is_default() const { return kind == Kind::Default; }
  bool is_element() const { return kind == Kind::Element; }
  bool is_missing() const { return kind == Kind::Missing; }

  friend bool operator==(const TransitionSource& a,
                         const TransitionSource& b) {
    return a.kind == b.kind && a.id == b.id;
  }
};

struct Transition {
  std::string id;
  TransitionSource source;
  std::string dest;  // empty marks a lost destination
  int priority = 1;
  std::optional<std::string> event;      // boolean input variable, if any
  std::optional<std::string> condition;  // absent means always true
  std::vector<std::string> condition_action;
  std::vector<std::string> transition_action;
};

/// The statechart model. Plain data: a Chart value may violate invariants
/// (mutants routinely do); validate_structure / validate_semantics decide.
/// Valid charts are immutable by convention and safe to share across threads.
struct Chart {
  std::string name;
  std::vector<Variable> variables;
  std::vector<State> states;
  std::vector<Junction> junctions;
  std::vector<Transition> transitions;

  const Variable* find_variable(const std::string& n) const {
    for (const auto& v : variables) {
      if (v.name == n) return &v;
    }
    return nullptr;
  }
  const State* find_state(const std::string& id) const {
    for (const auto& s : states) {
      if (s.id == id) return &s;
    }
    return nullptr;
  }
  State* find_state(const std::string& id) {
    for (auto& s : states) {
      if (s.id == id) return &s;
    }
    return nullptr;
  }
  const Junction* find_junction(const std::string& id) const {
    for (const auto& j : junctions) {
      if (j.id == id) return &j;
    }
    return nullptr;
  }
  const Transition* find_transition(const std::string& id) const {
    for (const auto& t : transitions) {
      if (t.id == id) return &t;
    }
    return nullptr;
  }
  Transition* find_transition(const std::string& id) {
    for (auto& t : transitions) {
      if (t.id == id) return &t;
    }
    return nullptr;
  }

  bool has_element(const std::string& id) const {
    return find_state(id) != nullptr || find_junction(id) != nullptr;
  }

  const Transition* default_transition() const {
    for (const auto& t : transitions) {
      if (t.source.is_default()) return &t;
    }
    return nullptr;
  }

  /// Outgoing transitions of a state or junction, ascending priority.
  std::vector<const Transition*> outgoing(const std::string& element_id) const {
    std::vector<const Transition*> out;
    for (const auto& t : transitions) {
      if (t.source.is_element() && t.source.id == element_id) {
        out.push_back(&t);
      }
    }
    std::sort(out.begin(), out.end(),
              [](const Transition* a, const Transition* b) {
                return a->priority < b->priority;
              });
    return out;
  }

  SymbolTable symbol_table() const {
    SymbolTable table;
    for (const auto& v : variables) {
      table.emplace(v.name, SymbolInfo{v.type, v.kind});
    }
    return table;
  }
};

inline bool operator==(const Variable& a, const Variable& b) {
  return a.name == b.name && a.kind == b.kind && a.type == b.type &&
         a.initial == b.initial;
}
inline bool operator==(const State& a, const State& b) {
  return a.id == b.id && a.name == b.name && a.entry == b.entry &&
         a.during == b.during && a.exit == b.exit;
}
inline bool operator==(const Junction& a, const Junction& b) {
  return a.id == b.id;
}
inline bool operator==(const Transition& a, const Transition& b) {
  return a.id == b.id && a.source == b.source && a.dest == b.dest &&
         a.priority == b.priority && a.event == b.event &&
         a.condition == b.condition &&
         a.condition_action == b.condition_action &&
         a.transition_action == b.transition_action;
}
inline bool operator==(const Chart& a, const Chart& b) {
  return a.name == b.name && a.variables == b.variables &&
         a.states == b.states && a.junctions == b.junctions &&
         a.transitions == b.transitions;
}

}  // namespace flowmut

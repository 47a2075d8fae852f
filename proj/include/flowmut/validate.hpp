// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "flowmut/chart.hpp"
#include "flowmut/expr.hpp"

namespace flowmut {

/// Root-cause classes for rejected charts and mutants. The first four map
/// one-to-one onto the observed LLM failure modes; TypeError and
/// StructuralViolation cover ill-typed logic and residual structure breaks.
enum class ErrorCategory : std::uint8_t {
  InvalidReference,
  DanglingTransition,
  UndefinedVariable,
  SyntaxError,
  TypeError,
  StructuralViolation,
};

inline const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::InvalidReference: return "invalid_reference";
    case ErrorCategory::DanglingTransition: return "dangling_transition";
    case ErrorCategory::UndefinedVariable: return "undefined_variable";
    case ErrorCategory::SyntaxError: return "syntax_error";
    case ErrorCategory::TypeError: return "type_error";
    case ErrorCategory::StructuralViolation: return "structural_violation";
  }
  return "?";
}

struct ValidationError {
  ErrorCategory category;
  std::string element_id;  // always set for InvalidReference / DanglingTransition
  std::string message;
  std::string location;  // field path
};

enum class ValidationStage : std::uint8_t { Generation, Compilation };
enum class Verdict : std::uint8_t {
  GenerableCompilable,
  GenerableNonCompilable,
  NonGenerable,
};

inline const char* to_string(ValidationStage s) {
  return s == ValidationStage::Generation ? "generation" : "compilation";
}
inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::GenerableCompilable: return "generable_compilable";
    case Verdict::GenerableNonCompilable: return "generable_non_compilable";
    case Verdict::NonGenerable: return "non_generable";
  }
  return "?";
}

struct ValidationReport {
  ValidationStage stage = ValidationStage::Compilation;
  std::vector<ValidationError> errors;
  Verdict verdict = Verdict::GenerableCompilable;

  bool generable() const { return verdict != Verdict::NonGenerable; }
  bool compilable() const { return verdict == Verdict::GenerableCompilable; }
};

// ---------------------------------------------------------------------------
// Generation stage: referential and structural invariants
// ---------------------------------------------------------------------------

/// Checks every referential/structural chart invariant. All violations are
/// collected; there is no fail-fast. Empty result means the chart is
/// generable (a materialized model exists).
inline std::vector<ValidationError> validate_structure(const Chart& chart) {
  std::vector<ValidationError> errors;
  auto add = [&](ErrorCategory cat, std::string element_id, std::string message,
                 std::string location) {
    errors.push_back({cat, std::move(element_id), std::move(message),
                      std::move(location)});
  };

  if (!is_identifier(chart.name)) {
    add(ErrorCategory::StructuralViolation, "",
        "chart name must be an identifier", "/name");
  }
  if (chart.states.empty()) {
    add(ErrorCategory::StructuralViolation, "",
        "chart must declare at least one state", "/states");
  }

  std::set<std::string> var_names;
  for (std::size_t i = 0; i < chart.variables.size(); ++i) {
    const Variable& v = chart.variables[i];
    std::string loc = "/variables/" + std::to_string(i);
    if (!is_identifier(v.name)) {
      add(ErrorCategory::StructuralViolation, "",
          "variable name '" + v.name + "' is not an identifier", loc + "/name");
    } else if (!var_names.insert(v.name).second) {
      add(ErrorCategory::StructuralViolation, "",
          "duplicate variable name '" + v.name + "'", loc + "/name");
    }
  }

  std::set<std::string> element_ids;
  for (const State& s : chart.states) {
    std::string loc = "/states/" + s.id;
    if (s.id.empty()) {
      add(ErrorCategory::StructuralViolation, "", "state with empty id", loc);
    } else if (!element_ids.insert(s.id).second) {
      add(ErrorCategory::StructuralViolation, s.id,
          "duplicate element id '" + s.id + "'", loc + "/id");
    }
    if (!is_identifier(s.name)) {
      add(ErrorCategory::StructuralViolation, s.id,
          "state name '" + s.name + "' is not an identifier", loc + "/name");
    }
  }
  for (const Junction& j : chart.junctions) {
    std::string loc = "/junctions/" + j.id;
    if (j.id.empty()) {
      add(ErrorCategory::StructuralViolation, "", "junction with empty id", loc);
    } else if (!element_ids.insert(j.id).second) {
      add(ErrorCategory::StructuralViolation, j.id,
          "duplicate element id '" + j.id + "'", loc + "/id");
    }
  }

  std::set<std::string> transition_ids;
  const Transition* default_transition = nullptr;
  // keyed by (is_default, source id) so arbitrary ids cannot collide
  std::map<std::pair<bool, std::string>, std::set<int>> priorities_by_source;
  for (const Transition& t : chart.transitions) {
    std::string loc = "/transitions/" + t.id;
    if (t.id.empty()) {
      add(ErrorCategory::StructuralViolation, "", "transition with empty id", loc);
    } else if (!transition_ids.insert(t.id).second) {
      add(ErrorCategory::StructuralViolation, t.id,
          "duplicate transition id '" + t.id + "'", loc + "/id");
    }

    if (t.source.is_missing() || (t.source.is_element() && t.source.id.empty())) {
      add(ErrorCategory::DanglingTransition, t.id,
          "transition '" + t.id + "' lost its source", loc + "/source");
    } else if (t.source.is_element() && !chart.has_element(t.source.id)) {
      add(ErrorCategory::InvalidReference, t.id,
          "transition '" + t.id + "' source references unknown element '" +
              t.source.id + "'",
          loc + "/source");
    }

    if (t.dest.empty()) {
      add(ErrorCategory::DanglingTransition, t.id,
          "transition '" + t.id + "' lost its destination", loc + "/dest");
    } else if (!chart.has_element(t.dest)) {
      add(ErrorCategory::InvalidReference, t.id,
          "transition '" + t.id + "' destination references unknown element '" +
              t.dest + "'",
          loc + "/dest");
    }

    if (t.source.is_default()) {
      if (default_transition != nullptr) {
        add(ErrorCategory::StructuralViolation, t.id,
            "more than one default transition", loc + "/source");
      } else {
        default_transition = &t;
        if (!t.dest.empty() && chart.find_junction(t.dest) != nullptr) {
          add(ErrorCategory::StructuralViolation, t.id,
              "default transition must lead to a state", loc + "/dest");
        }
      }
    }

    if (t.priority < 1) {
      add(ErrorCategory::StructuralViolation, t.id,
          "transition priority must be a positive integer", loc + "/priority");
    } else {
      auto source_key = std::make_pair(t.source.is_default(), t.source.id);
      if (!priorities_by_source[source_key].insert(t.priority).second) {
        add(ErrorCategory::StructuralViolation, t.id,
            "transition '" + t.id + "' repeats priority " +
                std::to_string(t.priority) + " on its source",
            loc + "/priority");
      }
    }
  }
  if (default_transition == nullptr) {
    add(ErrorCategory::StructuralViolation, "",
        "chart has no default transition", "/transitions");
  }

  // Junction graph (junction -> junction edges only) must be acyclic;
  // otherwise the simulator's path search could revisit a junction forever.
  std::map<std::string, std::vector<std::string>> junction_edges;
  for (const Transition& t : chart.transitions) {
    if (t.source.is_element() && chart.find_junction(t.source.id) != nullptr &&
        chart.find_junction(t.dest) != nullptr) {
      junction_edges[t.source.id].push_back(t.dest);
    }
  }
  std::map<std::string, int> mark;  // 0 unvisited, 1 on stack, 2 done
  std::vector<std::string> cyclic;
  auto dfs = [&](auto&& self, const std::string& id) -> bool {
    int& m = mark[id];
    if (m == 1) return true;
    if (m == 2) return false;
    m = 1;
    for (const auto& next : junction_edges[id]) {
      if (self(self, next)) {
        cyclic.push_back(id);
        m = 2;
        return true;
      }
    }
    m = 2;
    return false;
  };
  for (const Junction& j : chart.junctions) {
    if (mark[j.id] == 0 && dfs(dfs, j.id)) {
      add(ErrorCategory::StructuralViolation, cyclic.front(),
          "junction cycle reachable without passing through a state",
          "/junctions/" + cyclic.front());
      break;
    }
  }

  return errors;
}

// ---------------------------------------------------------------------------
// Compilation stage: names, syntax, and types
// ---------------------------------------------------------------------------

namespace detail {

inline void check_stmt_text(const std::string& src, const SymbolTable& table,
                            const std::string& element_id,
                            const std::string& location,
                            std::vector<ValidationError>& errors) {
  auto stmts = parse_stmts(src);
  if (!stmts) {
    errors.push_back({ErrorCategory::SyntaxError, element_id,
                      stmts.error().message + " at offset " +
                          std::to_string(stmts.error().offset),
                      location});
    return;
  }
  for (const Stmt& s : stmts.value()) {
    auto ok = check_stmt(s, table);
    if (!ok) {
      auto cat = ok.error().kind == TypeIssue::Kind::UndefinedVariable
                     ? ErrorCategory::UndefinedVariable
                     : ErrorCategory::TypeError;
      errors.push_back({cat, element_id, ok.error().message, location});
    }
  }
}

}  // namespace detail

/// Compilation-stage validation: every expression parses, every identifier
/// resolves to a declared variable, and everything type-checks. Only
/// meaningful once validate_structure returned no errors.
inline std::vector<ValidationError> validate_semantics(const Chart& chart) {
  std::vector<ValidationError> errors;
  SymbolTable table = chart.symbol_table();

  for (std::size_t i = 0; i < chart.variables.size(); ++i) {
    const Variable& v = chart.variables[i];
    if (v.initial.type() != v.type) {
      errors.push_back({ErrorCategory::TypeError, "",
                        "initial value of '" + v.name + "' is not of type " +
                            to_string(v.type),
                        "/variables/" + std::to_string(i) + "/initial"});
    }
  }

  for (const State& s : chart.states) {
    auto slot = [&](const char* slot_name, const std::vector<std::string>& stmts) {
      for (std::size_t k = 0; k < stmts.size(); ++k) {
        detail::check_stmt_text(stmts[k], table, s.id,
                                "/states/" + s.id + "/" + slot_name + "/" +
                                    std::to_string(k),
                                errors);
      }
    };
    slot("entry", s.entry);
    slot("during", s.during);
    slot("exit", s.exit);
  }

  for (const Transition& t : chart.transitions) {
    std::string loc = "/transitions/" + t.id;
    if (t.event) {
      auto it = table.find(*t.event);
      if (it == table.end()) {
        errors.push_back({ErrorCategory::UndefinedVariable, t.id,
                          "event references undefined variable '" + *t.event + "'",
                          loc + "/event"});
      } else if (it->second.type != ValueType::Boolean ||
                 it->second.kind != VarKind::Input) {
        errors.push_back({ErrorCategory::TypeError, t.id,
                          "event '" + *t.event +
                              "' must name a boolean input variable",
                          loc + "/event"});
      }
    }
    if (t.condition) {
      auto e = parse_expr(*t.condition);
      if (!e) {
        errors.push_back({ErrorCategory::SyntaxError, t.id,
                          e.error().message + " at offset " +
                              std::to_string(e.error().offset),
                          loc + "/condition"});
      } else {
        auto type = type_of(*e.value(), table);
        if (!type) {
          auto cat = type.error().kind == TypeIssue::Kind::UndefinedVariable
                         ? ErrorCategory::UndefinedVariable
                         : ErrorCategory::TypeError;
          errors.push_back({cat, t.id, type.error().message, loc + "/condition"});
        } else if (type.value() != ValueType::Boolean) {
          errors.push_back({ErrorCategory::TypeError, t.id,
                            "condition must be boolean", loc + "/condition"});
        }
      }
    }
    for (std::size_t k = 0; k < t.condition_action.size(); ++k) {
      detail::check_stmt_text(t.condition_action[k], table, t.id,
                              loc + "/condition_action/" + std::to_string(k),
                              errors);
    }
    for (std::size_t k = 0; k < t.transition_action.size(); ++k) {
      detail::check_stmt_text(t.transition_action[k], table, t.id,
                              loc + "/transition_action/" + std::to_string(k),
                              errors);
    }
  }

  return errors;
}

inline nlohmann::ordered_json validation_error_to_json(const ValidationError& e) {
  nlohmann::ordered_json j;
  j["category"] = to_string(e.category);
  j["element_id"] = e.element_id.empty() ? nlohmann::ordered_json(nullptr)
                                         : nlohmann::ordered_json(e.element_id);
  j["message"] = e.message;
  j["location"] = e.location;
  return j;
}

inline nlohmann::ordered_json validation_report_to_json(const ValidationReport& r) {
  nlohmann::ordered_json j;
  j["stage"] = to_string(r.stage);
  j["verdict"] = to_string(r.verdict);
  j["errors"] = nlohmann::ordered_json::array();
  for (const auto& e : r.errors) j["errors"].push_back(validation_error_to_json(e));
  return j;
}

/// Runs both stages and classifies the outcome.
inline ValidationReport validate_chart(const Chart& chart) {
  ValidationReport report;
  report.errors = validate_structure(chart);
  if (!report.errors.empty()) {
    report.stage = ValidationStage::Generation;
    report.verdict = Verdict::NonGenerable;
    return report;
  }
  report.stage = ValidationStage::Compilation;
  report.errors = validate_semantics(chart);
  report.verdict = report.errors.empty() ? Verdict::GenerableCompilable
                                         : Verdict::GenerableNonCompilable;
  return report;
}

}  // namespace flowmut

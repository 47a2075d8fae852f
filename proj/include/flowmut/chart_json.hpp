// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "flowmut/chart.hpp"
#include "flowmut/result.hpp"
#include "flowmut/validate.hpp"

namespace flowmut {

using Json = nlohmann::ordered_json;

struct ParseError {
  enum class Category : std::uint8_t {
    MalformedJson,
    SchemaViolation,
    InvariantViolation,
  };
  Category category;
  std::string path;  // JSON-pointer-like path to the offending field
  std::string message;
  std::vector<ValidationError> violations;  // set for InvariantViolation
};

inline const char* to_string(ParseError::Category c) {
  switch (c) {
    case ParseError::Category::MalformedJson: return "malformed-json";
    case ParseError::Category::SchemaViolation: return "schema-violation";
    case ParseError::Category::InvariantViolation: return "invariant-violation";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Element <-> JSON
// ---------------------------------------------------------------------------

inline Json variable_to_json(const Variable& v) {
  Json j;
  j["name"] = v.name;
  j["kind"] = to_string(v.kind);
  j["type"] = to_string(v.type);
  if (v.initial.is_boolean()) {
    j["initial"] = v.initial.as_boolean();
  } else {
    j["initial"] = v.initial.as_number();
  }
  return j;
}

inline Json state_to_json(const State& s) {
  Json j;
  j["id"] = s.id;
  j["name"] = s.name;
  j["entry"] = s.entry;
  j["during"] = s.during;
  j["exit"] = s.exit;
  return j;
}

inline Json junction_to_json(const Junction& jn) {
  Json j;
  j["id"] = jn.id;
  return j;
}

inline Json transition_to_json(const Transition& t) {
  Json j;
  j["id"] = t.id;
  if (t.source.is_default()) {
    j["source"] = nullptr;
  } else {
    j["source"] = t.source.id;  // Missing renders as "" and never validates
  }
  j["dest"] = t.dest;
  j["priority"] = t.priority;
  j["event"] = t.event ? Json(*t.event) : Json(nullptr);
  j["condition"] = t.condition ? Json(*t.condition) : Json(nullptr);
  j["condition_action"] = t.condition_action;
  j["transition_action"] = t.transition_action;
  return j;
}

inline Json element_to_json(const Chart& chart, const std::string& id) {
  if (const State* s = chart.find_state(id)) return state_to_json(*s);
  if (const Junction* j = chart.find_junction(id)) return junction_to_json(*j);
  if (const Transition* t = chart.find_transition(id)) {
    return transition_to_json(*t);
  }
  return Json(nullptr);
}

namespace detail {

struct SchemaCheck {
  std::string path;
  std::string message;
};

using FieldError = std::optional<SchemaCheck>;

inline FieldError expect_string(const Json& j, const std::string& path,
                                const char* key, std::string& out) {
  if (!j.contains(key)) return SchemaCheck{path, std::string("missing '") + key + "'"};
  if (!j[key].is_string()) return SchemaCheck{path + "/" + key, "expected a string"};
  out = j[key].get<std::string>();
  return std::nullopt;
}

inline FieldError expect_string_list(const Json& j, const std::string& path,
                                     const char* key, bool required,
                                     std::vector<std::string>& out) {
  out.clear();
  if (!j.contains(key)) {
    if (required) return SchemaCheck{path, std::string("missing '") + key + "'"};
    return std::nullopt;
  }
  if (!j[key].is_array()) {
    return SchemaCheck{path + "/" + key, "expected an array of strings"};
  }
  for (const auto& e : j[key]) {
    if (!e.is_string()) {
      return SchemaCheck{path + "/" + key, "expected an array of strings"};
    }
    out.push_back(e.get<std::string>());
  }
  return std::nullopt;
}

}  // namespace detail

/// Reads a state element. Strict mode requires every schema field; lenient
/// mode (used on LLM replacement objects) fills absent lists with empties and
/// ignores unknown keys.
inline Result<State, detail::SchemaCheck> state_from_json(const Json& j,
                                                          const std::string& path,
                                                          bool strict) {
  if (!j.is_object()) return detail::SchemaCheck{path, "expected an object"};
  State s;
  if (strict) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      if (k != "id" && k != "name" && k != "entry" && k != "during" && k != "exit") {
        return detail::SchemaCheck{path + "/" + k, "unknown field"};
      }
    }
  }
  if (auto e = detail::expect_string(j, path, "id", s.id)) return *e;
  if (strict || j.contains("name")) {
    if (auto e = detail::expect_string(j, path, "name", s.name)) return *e;
  }
  if (auto e = detail::expect_string_list(j, path, "entry", strict, s.entry)) return *e;
  if (auto e = detail::expect_string_list(j, path, "during", strict, s.during)) return *e;
  if (auto e = detail::expect_string_list(j, path, "exit", strict, s.exit)) return *e;
  return s;
}

inline Result<Transition, detail::SchemaCheck> transition_from_json(
    const Json& j, const std::string& path, bool strict) {
  if (!j.is_object()) return detail::SchemaCheck{path, "expected an object"};
  Transition t;
  if (strict) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      if (k != "id" && k != "source" && k != "dest" && k != "priority" &&
          k != "event" && k != "condition" && k != "condition_action" &&
          k != "transition_action") {
        return detail::SchemaCheck{path + "/" + k, "unknown field"};
      }
    }
  }
  if (auto e = detail::expect_string(j, path, "id", t.id)) return *e;

  if (!j.contains("source")) {
    if (strict) return detail::SchemaCheck{path, "missing 'source'"};
    t.source = TransitionSource::missing();
  } else if (j["source"].is_null()) {
    t.source = TransitionSource::def();
  } else if (j["source"].is_string()) {
    t.source = TransitionSource::element(j["source"].get<std::string>());
  } else {
    return detail::SchemaCheck{path + "/source", "expected a string or null"};
  }

  if (!j.contains("dest")) {
    if (strict) return detail::SchemaCheck{path, "missing 'dest'"};
    t.dest.clear();
  } else if (j["dest"].is_string()) {
    t.dest = j["dest"].get<std::string>();
  } else if (!strict && j["dest"].is_null()) {
    t.dest.clear();
  } else {
    return detail::SchemaCheck{path + "/dest", "expected a string"};
  }

  if (!j.contains("priority")) {
    return detail::SchemaCheck{path, "missing 'priority'"};
  }
  if (j["priority"].is_number_integer()) {
    t.priority = j["priority"].get<int>();
  } else if (!strict && j["priority"].is_number()) {
    double p = j["priority"].get<double>();
    if (p != static_cast<int>(p)) {
      return detail::SchemaCheck{path + "/priority", "expected an integer"};
    }
    t.priority = static_cast<int>(p);
  } else {
    return detail::SchemaCheck{path + "/priority", "expected an integer"};
  }

  auto opt_string = [&](const char* key, std::optional<std::string>& out)
      -> detail::FieldError {
    out.reset();
    if (!j.contains(key)) {
      if (strict) return detail::SchemaCheck{path, std::string("missing '") + key + "'"};
      return std::nullopt;
    }
    if (j[key].is_null()) return std::nullopt;
    if (!j[key].is_string()) {
      return detail::SchemaCheck{path + "/" + key, "expected a string or null"};
    }
    out = j[key].get<std::string>();
    return std::nullopt;
  };
  if (auto e = opt_string("event", t.event)) return *e;
  if (auto e = opt_string("condition", t.condition)) return *e;
  if (auto e = detail::expect_string_list(j, path, "condition_action", strict,
                                          t.condition_action)) {
    return *e;
  }
  if (auto e = detail::expect_string_list(j, path, "transition_action", strict,
                                          t.transition_action)) {
    return *e;
  }
  return t;
}

// ---------------------------------------------------------------------------
// Chart <-> text
// ---------------------------------------------------------------------------

/// Canonical serialization: fixed key order, states/junctions/transitions
/// sorted by id and variables by name, numbers in shortest round-trip form,
/// two-space indentation. Charts are conventionally kept in this sorted
/// order so that parse_chart(serialize_chart(c)) == c.
inline std::string serialize_chart(const Chart& chart) {
  Json j;
  j["name"] = chart.name;

  auto variables = chart.variables;
  std::sort(variables.begin(), variables.end(),
            [](const Variable& a, const Variable& b) { return a.name < b.name; });
  j["variables"] = Json::array();
  for (const auto& v : variables) j["variables"].push_back(variable_to_json(v));

  auto states = chart.states;
  std::sort(states.begin(), states.end(),
            [](const State& a, const State& b) { return a.id < b.id; });
  j["states"] = Json::array();
  for (const auto& s : states) j["states"].push_back(state_to_json(s));

  auto junctions = chart.junctions;
  std::sort(junctions.begin(), junctions.end(),
            [](const Junction& a, const Junction& b) { return a.id < b.id; });
  j["junctions"] = Json::array();
  for (const auto& jn : junctions) j["junctions"].push_back(junction_to_json(jn));

  auto transitions = chart.transitions;
  std::sort(transitions.begin(), transitions.end(),
            [](const Transition& a, const Transition& b) { return a.id < b.id; });
  j["transitions"] = Json::array();
  for (const auto& t : transitions) j["transitions"].push_back(transition_to_json(t));

  return j.dump(2) + "\n";
}

/// Schema-level parse only: well-formed JSON in the documented shape, no
/// invariant checking. Mutant pipelines validate separately so that broken
/// charts can still be classified.
inline Result<Chart, ParseError> parse_chart_document(const std::string& text) {
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    return ParseError{ParseError::Category::MalformedJson, "",
                      "input is not well-formed JSON", {}};
  }
  auto schema_err = [](const detail::SchemaCheck& c) {
    return ParseError{ParseError::Category::SchemaViolation, c.path, c.message, {}};
  };
  if (!j.is_object()) {
    return schema_err({"", "expected a top-level object"});
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k != "name" && k != "variables" && k != "states" && k != "junctions" &&
        k != "transitions") {
      return schema_err({"/" + k, "unknown field"});
    }
  }

  Chart chart;
  if (auto e = detail::expect_string(j, "", "name", chart.name)) {
    return schema_err(*e);
  }
  for (const char* key : {"variables", "states", "junctions", "transitions"}) {
    if (!j.contains(key)) return schema_err({"", std::string("missing '") + key + "'"});
    if (!j[key].is_array()) {
      return schema_err({std::string("/") + key, "expected an array"});
    }
  }

  std::size_t idx = 0;
  for (const auto& vj : j["variables"]) {
    std::string path = "/variables/" + std::to_string(idx++);
    if (!vj.is_object()) return schema_err({path, "expected an object"});
    for (auto it = vj.begin(); it != vj.end(); ++it) {
      const std::string& k = it.key();
      if (k != "name" && k != "kind" && k != "type" && k != "initial") {
        return schema_err({path + "/" + k, "unknown field"});
      }
    }
    Variable v;
    if (auto e = detail::expect_string(vj, path, "name", v.name)) return schema_err(*e);
    std::string kind, type;
    if (auto e = detail::expect_string(vj, path, "kind", kind)) return schema_err(*e);
    if (auto e = detail::expect_string(vj, path, "type", type)) return schema_err(*e);
    if (kind == "input") v.kind = VarKind::Input;
    else if (kind == "output") v.kind = VarKind::Output;
    else if (kind == "local") v.kind = VarKind::Local;
    else return schema_err({path + "/kind", "expected input, output or local"});
    if (type == "number") v.type = ValueType::Number;
    else if (type == "boolean") v.type = ValueType::Boolean;
    else return schema_err({path + "/type", "expected number or boolean"});
    if (!vj.contains("initial")) return schema_err({path, "missing 'initial'"});
    if (vj["initial"].is_boolean()) {
      v.initial = Value::boolean(vj["initial"].get<bool>());
    } else if (vj["initial"].is_number()) {
      v.initial = Value::number(vj["initial"].get<double>());
    } else {
      return schema_err({path + "/initial", "expected a number or boolean"});
    }
    chart.variables.push_back(std::move(v));
  }

  idx = 0;
  for (const auto& sj : j["states"]) {
    auto s = state_from_json(sj, "/states/" + std::to_string(idx++), true);
    if (!s) return schema_err(s.error());
    chart.states.push_back(std::move(s.value()));
  }

  idx = 0;
  for (const auto& jj : j["junctions"]) {
    std::string path = "/junctions/" + std::to_string(idx++);
    if (!jj.is_object()) return schema_err({path, "expected an object"});
    for (auto it = jj.begin(); it != jj.end(); ++it) {
      if (it.key() != "id") return schema_err({path + "/" + it.key(), "unknown field"});
    }
    Junction jn;
    if (auto e = detail::expect_string(jj, path, "id", jn.id)) return schema_err(*e);
    chart.junctions.push_back(std::move(jn));
  }

  idx = 0;
  for (const auto& tj : j["transitions"]) {
    auto t = transition_from_json(tj, "/transitions/" + std::to_string(idx++), true);
    if (!t) return schema_err(t.error());
    chart.transitions.push_back(std::move(t.value()));
  }
  return chart;
}

/// Parses and fully validates chart text. The result satisfies every chart
/// invariant; failures carry the taxonomy category and a field path.
inline Result<Chart, ParseError> parse_chart(const std::string& text) {
  auto doc = parse_chart_document(text);
  if (!doc) return doc;
  Chart& chart = doc.value();

  auto errors = validate_structure(chart);
  if (errors.empty()) {
    auto sem = validate_semantics(chart);
    errors.insert(errors.end(), sem.begin(), sem.end());
  }
  if (!errors.empty()) {
    ParseError pe{ParseError::Category::InvariantViolation,
                  errors.front().location, errors.front().message,
                  std::move(errors)};
    return pe;
  }
  return std::move(chart);
}

}  // namespace flowmut

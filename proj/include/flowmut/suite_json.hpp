// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "flowmut/chart.hpp"
#include "flowmut/result.hpp"
#include "flowmut/simulate.hpp"

namespace flowmut {

struct SuiteParseError {
  std::string path;
  std::string message;
};

/// Reads a `*.suite.json` document. Shape only; pairing with a concrete
/// chart is checked by validate_suite.
inline Result<TestSuite, SuiteParseError> parse_suite(const std::string& text) {
  auto j = nlohmann::ordered_json::parse(text, nullptr, false);
  if (j.is_discarded()) return SuiteParseError{"", "input is not well-formed JSON"};
  if (!j.is_object()) return SuiteParseError{"", "expected a top-level object"};
  TestSuite suite;
  if (j.contains("tolerance")) {
    if (!j["tolerance"].is_number()) {
      return SuiteParseError{"/tolerance", "expected a number"};
    }
    suite.tolerance = j["tolerance"].get<double>();
    if (suite.tolerance < 0) {
      return SuiteParseError{"/tolerance", "tolerance must be nonnegative"};
    }
  }
  if (!j.contains("tests") || !j["tests"].is_array()) {
    return SuiteParseError{"/tests", "expected an array of tests"};
  }
  std::size_t idx = 0;
  for (const auto& tj : j["tests"]) {
    std::string path = "/tests/" + std::to_string(idx++);
    if (!tj.is_object()) return SuiteParseError{path, "expected an object"};
    TestCase test;
    if (!tj.contains("name") || !tj["name"].is_string()) {
      return SuiteParseError{path + "/name", "expected a string"};
    }
    test.name = tj["name"].get<std::string>();
    if (!tj.contains("steps") || !tj["steps"].is_number_integer()) {
      return SuiteParseError{path + "/steps", "expected an integer"};
    }
    test.steps = tj["steps"].get<int>();
    if (test.steps < 1 || test.steps > kMaxStepsPerTest) {
      return SuiteParseError{path + "/steps",
                             "steps must be in 1.." + std::to_string(kMaxStepsPerTest)};
    }
    if (!tj.contains("inputs") || !tj["inputs"].is_object()) {
      return SuiteParseError{path + "/inputs", "expected an object"};
    }
    for (auto it = tj["inputs"].begin(); it != tj["inputs"].end(); ++it) {
      if (!it.value().is_array()) {
        return SuiteParseError{path + "/inputs/" + it.key(), "expected an array"};
      }
      std::vector<Value> seq;
      for (const auto& v : it.value()) {
        if (v.is_boolean()) {
          seq.push_back(Value::boolean(v.get<bool>()));
        } else if (v.is_number()) {
          seq.push_back(Value::number(v.get<double>()));
        } else {
          return SuiteParseError{path + "/inputs/" + it.key(),
                                 "expected numbers or booleans"};
        }
      }
      test.inputs.emplace(it.key(), std::move(seq));
    }
    suite.tests.push_back(std::move(test));
  }
  return suite;
}

/// Chart/suite pairing problems: every declared input needs a sequence of
/// the right length and element type; unknown input names are rejected.
inline std::vector<std::string> validate_suite(const Chart& chart,
                                               const TestSuite& suite) {
  std::vector<std::string> problems;
  for (const TestCase& test : suite.tests) {
    for (const Variable& v : chart.variables) {
      if (v.kind != VarKind::Input) continue;
      auto it = test.inputs.find(v.name);
      if (it == test.inputs.end()) {
        problems.push_back("test '" + test.name + "' is missing input '" + v.name + "'");
        continue;
      }
      if (static_cast<int>(it->second.size()) != test.steps) {
        problems.push_back("test '" + test.name + "' input '" + v.name + "' has " +
                           std::to_string(it->second.size()) + " values, expected " +
                           std::to_string(test.steps));
      }
      for (const Value& val : it->second) {
        if (val.type() != v.type) {
          problems.push_back("test '" + test.name + "' input '" + v.name +
                             "' mixes value types");
          break;
        }
      }
    }
    for (const auto& [name, seq] : test.inputs) {
      (void)seq;
      const Variable* v = chart.find_variable(name);
      if (v == nullptr || v->kind != VarKind::Input) {
        problems.push_back("test '" + test.name + "' drives unknown input '" + name + "'");
      }
    }
  }
  return problems;
}

inline nlohmann::ordered_json value_to_json(const Value& v) {
  if (v.is_boolean()) return v.as_boolean();
  return v.as_number();
}

inline nlohmann::ordered_json trace_to_json(const Trace& trace) {
  nlohmann::ordered_json j;
  j["outputs"] = nlohmann::ordered_json::object();
  for (const auto& [name, seq] : trace.outputs) {
    auto arr = nlohmann::ordered_json::array();
    for (const Value& v : seq) arr.push_back(value_to_json(v));
    j["outputs"][name] = std::move(arr);
  }
  j["active_state"] = trace.active_state;
  if (trace.runtime_error) {
    j["runtime_error"] = {{"step", trace.runtime_error->step},
                          {"element_id", trace.runtime_error->element_id},
                          {"message", trace.runtime_error->message}};
  } else {
    j["runtime_error"] = nullptr;
  }
  return j;
}

inline Result<Trace, SuiteParseError> trace_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object() || !j.contains("outputs") || !j["outputs"].is_object() ||
      !j.contains("active_state") || !j["active_state"].is_array()) {
    return SuiteParseError{"", "malformed trace record"};
  }
  Trace t;
  for (auto it = j["outputs"].begin(); it != j["outputs"].end(); ++it) {
    std::vector<Value> seq;
    for (const auto& v : it.value()) {
      if (v.is_boolean()) {
        seq.push_back(Value::boolean(v.get<bool>()));
      } else if (v.is_number()) {
        seq.push_back(Value::number(v.get<double>()));
      } else {
        return SuiteParseError{"/outputs/" + it.key(), "expected numbers or booleans"};
      }
    }
    t.outputs.emplace(it.key(), std::move(seq));
  }
  for (const auto& s : j["active_state"]) {
    if (!s.is_string()) return SuiteParseError{"/active_state", "expected strings"};
    t.active_state.push_back(s.get<std::string>());
  }
  if (j.contains("runtime_error") && j["runtime_error"].is_object()) {
    const auto& e = j["runtime_error"];
    RuntimeFault f;
    f.step = e.value("step", 0);
    f.element_id = e.value("element_id", std::string{});
    f.message = e.value("message", std::string{});
    t.runtime_error = f;
  }
  return t;
}

}  // namespace flowmut

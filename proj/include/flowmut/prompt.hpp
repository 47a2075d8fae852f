// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flowmut/baseline.hpp"
#include "flowmut/chart.hpp"
#include "flowmut/chart_json.hpp"
#include "flowmut/result.hpp"

namespace flowmut {

/// Global lets the model edit anywhere in the chart; Local confines edits to
/// one preselected state or transition.
struct MutationStrategy {
  enum class Kind : std::uint8_t { Global, Local };
  Kind kind = Kind::Global;
  std::string element_id;  // set iff kind == Local

  static MutationStrategy global() { return {Kind::Global, {}}; }
  static MutationStrategy local(std::string element_id) {
    return {Kind::Local, std::move(element_id)};
  }
  bool is_local() const { return kind == Kind::Local; }
};

inline const char* to_string(MutationStrategy::Kind k) {
  return k == MutationStrategy::Kind::Global ? "global" : "local";
}

enum class PromptTemplate : std::uint8_t { P1, P2, P3, P4 };

inline const char* to_string(PromptTemplate t) {
  switch (t) {
    case PromptTemplate::P1: return "P1";
    case PromptTemplate::P2: return "P2";
    case PromptTemplate::P3: return "P3";
    case PromptTemplate::P4: return "P4";
  }
  return "?";
}

/// The template follows from the strategy and the shot count: zero-shot
/// global is P1, zero-shot local P2, few-shot global P3, few-shot local P4.
inline PromptTemplate template_for(MutationStrategy::Kind kind, int few_shot_count) {
  if (kind == MutationStrategy::Kind::Global) {
    return few_shot_count == 0 ? PromptTemplate::P1 : PromptTemplate::P3;
  }
  return few_shot_count == 0 ? PromptTemplate::P2 : PromptTemplate::P4;
}

struct PromptSpec {
  PromptTemplate tmpl = PromptTemplate::P1;
  int few_shot_count = 0;  // 0, 3, 6 or 9
  MutationStrategy strategy;
  int n_mutants = 25;
  std::string model_name;
  double temperature = 0.7;

  /// Template/strategy/shot-count consistency rules.
  std::optional<std::string> invalid_reason() const {
    bool is_global_template =
        tmpl == PromptTemplate::P1 || tmpl == PromptTemplate::P3;
    if (is_global_template && strategy.is_local()) {
      return "P1/P3 require the Global strategy";
    }
    if (!is_global_template && !strategy.is_local()) {
      return "P2/P4 require the Local strategy";
    }
    bool zero_shot = tmpl == PromptTemplate::P1 || tmpl == PromptTemplate::P2;
    if (zero_shot && few_shot_count != 0) {
      return "P1/P2 are zero-shot templates";
    }
    if (!zero_shot && few_shot_count != 3 && few_shot_count != 6 &&
        few_shot_count != 9) {
      return "P3/P4 take 3, 6 or 9 examples";
    }
    if (n_mutants < 1) return "n_mutants must be positive";
    if (temperature < 0.0 || temperature > 1.0) return "temperature must be in [0,1]";
    return std::nullopt;
  }
};

struct ExampleCountMismatch {
  std::string message;
};

/// JSON shape the model is asked to emit, shown verbatim in the prompt's
/// Output Requirements section and consumed by parse_proposals.
inline const char* proposal_schema_text() {
  return R"([
  {
    "edits": [
      {
        "kind": "state" | "transition",
        "id": "<id of the element to replace>",
        "replacement": { <full element object in the chart schema> }
      }
    ]
  }
])";
}

/// Builds the four-section prompt (Context, Input Data, Output Requirements,
/// Instruction). Pure function of its arguments: identical inputs produce
/// byte-identical prompts.
inline Result<std::string, ExampleCountMismatch> build_prompt(
    const Chart& chart, const PromptSpec& spec,
    const std::vector<MutationRecord>& examples) {
  if (static_cast<int>(examples.size()) != spec.few_shot_count) {
    return ExampleCountMismatch{
        "spec asks for " + std::to_string(spec.few_shot_count) +
        " few-shot examples, got " + std::to_string(examples.size())};
  }
  const std::string n = std::to_string(spec.n_mutants);
  std::string out;
  out.reserve(4096);

  out += "## Context\n\n";
  out +=
      "You are a mutation testing assistant for statechart models. A "
      "statechart is given as JSON with four element kinds: variables "
      "(input/output/local signals), states (with entry/during/exit action "
      "lists), junctions (connective nodes), and prioritized transitions "
      "between states and junctions. Conditions and actions use a small "
      "expression language (arithmetic, comparisons, boolean operators, "
      "assignments such as \"LIGHT = 1\").\n";
  out +=
      "A mutant is a copy of the model containing a small, deliberate fault: "
      "for example changing a transition condition from \"DOOR_SENSOR == 1\" "
      "to \"DOOR_SENSOR != 1\", or changing an assigned constant.\n";
  if (!spec.strategy.is_local()) {
    out += "\nThe statechart model to mutate, in JSON format:\n\n```json\n";
    out += serialize_chart(chart);
    out += "```\n";
  }
  if (spec.few_shot_count > 0) {
    out += "\nExamples of mutations (element before and after):\n";
    for (std::size_t i = 0; i < examples.size(); ++i) {
      const MutationRecord& ex = examples[i];
      out += "\nExample " + std::to_string(i + 1) + " (changed field: " +
             ex.field + "):\nBefore: " + ex.before + "\nAfter:  " + ex.after +
             "\n";
    }
  }

  out += "\n## Input Data\n\n";
  out += "Number of mutants to generate: " + n + "\n";
  if (spec.strategy.is_local()) {
    const std::string& id = spec.strategy.element_id;
    if (chart.find_state(id) != nullptr) {
      out += "Element to mutate (state):\n\n```json\n";
      out += state_to_json(*chart.find_state(id)).dump(2);
      out += "\n```\n";
    } else if (chart.find_transition(id) != nullptr) {
      out += "Element to mutate (transition):\n\n```json\n";
      out += transition_to_json(*chart.find_transition(id)).dump(2);
      out += "\n```\n";
      out += "\nIDs of the states or junctions that may act as the source or "
             "destination of this transition:\n";
      Json ids = Json::array();
      for (const State& s : chart.states) ids.push_back(s.id);
      for (const Junction& j : chart.junctions) ids.push_back(j.id);
      out += ids.dump();
      out += "\n";
    } else {
      out += "Element to mutate: " + id + "\n";
    }
  }

  out += "\n## Output Requirements\n\n";
  out += "Respond with a JSON array of mutant objects in exactly this shape:\n\n";
  out += proposal_schema_text();
  out += "\n\nRules:\n";
  out += "- Each mutant replaces whole elements by id; keep every field of the "
         "element schema in the replacement.\n";
  out += "- Attributes such as Name must not be mutated; ids must refer to "
         "elements that exist in the model.\n";
  out += "- Mutate behavior (conditions, actions, destinations, priorities), "
         "introducing exactly one small fault per mutant.\n";
  out += "- Use only variables declared in the model.\n";
  if (spec.strategy.is_local()) {
    out += "- Edit only the element given in Input Data; edits to any other "
           "element will be rejected.\n";
  }

  out += "\n## Instruction\n\n";
  out += "Generate exactly " + n +
         " mutants of the statechart following the context, input data and "
         "output requirements above. Output only the JSON array.\n";
  return out;
}

}  // namespace flowmut

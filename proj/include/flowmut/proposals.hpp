// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "flowmut/chart.hpp"
#include "flowmut/chart_json.hpp"
#include "flowmut/prompt.hpp"
#include "flowmut/validate.hpp"

namespace flowmut {

struct ProposalEdit {
  ElementKind kind;
  std::string id;
  Json replacement;
};

/// One mutant proposed by the model: whole-element replacement edits plus
/// the raw fragment it was parsed from.
struct MutantProposal {
  std::vector<ProposalEdit> edits;
  std::string raw_text;
};

struct ParsedProposals {
  std::vector<MutantProposal> proposals;
  int parse_failures = 0;
};

namespace detail {

inline std::optional<MutantProposal> proposal_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("edits") || !j["edits"].is_array() ||
      j["edits"].empty()) {
    return std::nullopt;
  }
  MutantProposal p;
  std::set<std::string> seen_ids;
  for (const auto& ej : j["edits"]) {
    if (!ej.is_object()) return std::nullopt;
    if (!ej.contains("kind") || !ej["kind"].is_string()) return std::nullopt;
    std::string kind = ej["kind"].get<std::string>();
    ProposalEdit edit;
    if (kind == "state") {
      edit.kind = ElementKind::State;
    } else if (kind == "transition") {
      edit.kind = ElementKind::Transition;
    } else {
      return std::nullopt;
    }
    if (!ej.contains("id") || !ej["id"].is_string() ||
        ej["id"].get<std::string>().empty()) {
      return std::nullopt;
    }
    edit.id = ej["id"].get<std::string>();
    if (!seen_ids.insert(edit.id).second) return std::nullopt;
    if (!ej.contains("replacement") || !ej["replacement"].is_object()) {
      return std::nullopt;
    }
    edit.replacement = ej["replacement"];
    p.edits.push_back(std::move(edit));
  }
  p.raw_text = j.dump();
  return p;
}

}  // namespace detail

/// Extracts every JSON value from a model response, tolerating markdown
/// fences and surrounding prose. Values matching the proposal schema become
/// proposals; any other JSON value — including fragments that fail to parse,
/// such as a response truncated mid-object — counts as one parse failure.
inline ParsedProposals parse_proposals(const std::string& response_text) {
  ParsedProposals out;
  std::size_t pos = 0;
  const std::size_t n = response_text.size();

  auto classify = [&](const Json& value) {
    if (auto p = detail::proposal_from_json(value)) {
      out.proposals.push_back(std::move(*p));
    } else {
      ++out.parse_failures;
    }
  };

  while (pos < n) {
    std::size_t start = response_text.find_first_of("{[", pos);
    if (start == std::string::npos) break;
    std::istringstream stream(response_text.substr(start));
    Json value;
    try {
      stream >> value;
    } catch (const Json::parse_error& e) {
      if (response_text[start] == '[') {
        // Recover the elements of a broken array individually.
        pos = start + 1;
      } else {
        ++out.parse_failures;
        std::size_t advance = e.byte > 0 ? static_cast<std::size_t>(e.byte) : 1;
        pos = std::max(start + 1, start + advance);
      }
      continue;
    }
    if (value.is_array()) {
      for (const auto& element : value) {
        if (element.is_object()) classify(element);
        // bare scalars inside an array are prose-level noise, not proposals
      }
    } else {
      classify(value);
    }
    auto consumed = stream.tellg();
    if (consumed < 0) {
      pos = n;  // the value ended exactly at end of input
    } else {
      pos = start + static_cast<std::size_t>(consumed);
    }
  }
  return out;
}

/// Overload recording how many proposals were expected; callers feed the
/// discrepancy into the mutant-count metric.
inline ParsedProposals parse_proposals(const std::string& response_text,
                                       int /*expected*/) {
  return parse_proposals(response_text);
}

struct ApplyOutcome {
  std::optional<Chart> chart;  // present iff generable
  ValidationReport report;

  bool generable() const { return report.generable(); }
  bool compilable() const { return report.compilable(); }
};

/// Materializes a proposal: each edit replaces the element with the matching
/// id wholesale, with state names force-restored from the original. The
/// result passes through both validation stages; under a Local strategy,
/// edits outside the selected element reject the proposal.
inline ApplyOutcome apply_proposal(const Chart& chart,
                                   const MutantProposal& proposal,
                                   const MutationStrategy* strategy = nullptr) {
  ApplyOutcome outcome;
  Chart mutated = chart;
  std::vector<ValidationError>& errors = outcome.report.errors;

  for (const ProposalEdit& edit : proposal.edits) {
    if (strategy != nullptr && strategy->is_local() &&
        edit.id != strategy->element_id) {
      errors.push_back({ErrorCategory::StructuralViolation, edit.id,
                        "edit targets '" + edit.id +
                            "' outside the Local selection '" +
                            strategy->element_id + "'",
                        "/edits"});
      continue;
    }
    if (edit.kind == ElementKind::State) {
      State* target = mutated.find_state(edit.id);
      if (target == nullptr) {
        errors.push_back({ErrorCategory::InvalidReference, edit.id,
                          "no state with id '" + edit.id + "'", "/edits"});
        continue;
      }
      auto parsed = state_from_json(edit.replacement, "/edits", false);
      if (!parsed) {
        errors.push_back({ErrorCategory::StructuralViolation, edit.id,
                          parsed.error().message, parsed.error().path});
        continue;
      }
      State replacement = std::move(parsed.value());
      if (replacement.id.empty()) replacement.id = edit.id;
      if (replacement.id != edit.id) {
        errors.push_back({ErrorCategory::StructuralViolation, edit.id,
                          "replacement changes the element id to '" +
                              replacement.id + "'",
                          "/edits"});
        continue;
      }
      replacement.name = target->name;  // names must not be mutated
      *target = std::move(replacement);
    } else {
      Transition* target = mutated.find_transition(edit.id);
      if (target == nullptr) {
        errors.push_back({ErrorCategory::InvalidReference, edit.id,
                          "no transition with id '" + edit.id + "'", "/edits"});
        continue;
      }
      auto parsed = transition_from_json(edit.replacement, "/edits", false);
      if (!parsed) {
        errors.push_back({ErrorCategory::StructuralViolation, edit.id,
                          parsed.error().message, parsed.error().path});
        continue;
      }
      Transition replacement = std::move(parsed.value());
      if (replacement.id.empty()) replacement.id = edit.id;
      if (replacement.id != edit.id) {
        errors.push_back({ErrorCategory::StructuralViolation, edit.id,
                          "replacement changes the element id to '" +
                              replacement.id + "'",
                          "/edits"});
        continue;
      }
      *target = std::move(replacement);
    }
  }

  if (errors.empty()) {
    auto structural = validate_structure(mutated);
    errors.insert(errors.end(), structural.begin(), structural.end());
  }
  if (!errors.empty()) {
    outcome.report.stage = ValidationStage::Generation;
    outcome.report.verdict = Verdict::NonGenerable;
    return outcome;
  }

  outcome.report.stage = ValidationStage::Compilation;
  outcome.report.errors = validate_semantics(mutated);
  outcome.report.verdict = outcome.report.errors.empty()
                               ? Verdict::GenerableCompilable
                               : Verdict::GenerableNonCompilable;
  outcome.chart = std::move(mutated);  // materialized even if non-compilable
  return outcome;
}

}  // namespace flowmut

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "flowmut/chart.hpp"
#include "flowmut/eval.hpp"
#include "flowmut/expr.hpp"

namespace flowmut {

/// Configuration faults (bad test shape, unvalidated chart, interface
/// mismatch between charts under comparison).
struct SimulatorError {
  std::string message;
};

struct InterfaceMismatch {
  std::string message;
};

// Guards campaign runs against pathological charts.
constexpr int kMaxStepsPerTest = 100000;

struct TestCase {
  std::string name;
  int steps = 0;
  std::map<std::string, std::vector<Value>> inputs;  // input variable -> per-step value
};

struct TestSuite {
  double tolerance = 1e-9;
  std::vector<TestCase> tests;
};

struct RuntimeFault {
  int step = 0;
  std::string element_id;
  std::string message;
};

struct Trace {
  std::map<std::string, std::vector<Value>> outputs;
  std::vector<std::string> active_state;
  std::optional<RuntimeFault> runtime_error;

  int executed_steps() const { return static_cast<int>(active_state.size()); }
};

struct CoverageReport {
  double decision_coverage = 0.0;
  double execution_coverage = 0.0;
  std::vector<std::string> uncovered;
};

enum class TestVerdict : std::uint8_t { Killed, Alive };

// ---------------------------------------------------------------------------
// Compiled chart
// ---------------------------------------------------------------------------

namespace detail {

struct CompiledTransition {
  const Transition* t = nullptr;
  ExprPtr condition;  // null when the transition is unconditioned
  std::vector<Stmt> condition_action;
  std::vector<Stmt> transition_action;
  bool dest_is_state = false;
};

struct CompiledState {
  const State* s = nullptr;
  std::vector<Stmt> entry;
  std::vector<Stmt> during;
  std::vector<Stmt> exit;
};

struct CoverageAccumulator {
  std::set<std::string> entered_states;
  std::set<std::string> fired_transitions;
  std::set<std::string> condition_true;
  std::set<std::string> condition_false;
};

/// Pre-parsed chart. Construction requires a chart that already passed both
/// validation stages; anything else is a programming error here.
class CompiledChart {
 public:
  explicit CompiledChart(const Chart& chart) : chart_(&chart) {
    auto compile_stmts = [](const std::vector<std::string>& sources) {
      std::vector<Stmt> out;
      for (const auto& src : sources) {
        auto parsed = parse_stmts(src);
        if (!parsed) throw SimulatorError{"simulating an unvalidated chart: " + src};
        for (auto& s : parsed.value()) out.push_back(std::move(s));
      }
      return out;
    };
    for (const State& s : chart.states) {
      CompiledState cs;
      cs.s = &s;
      cs.entry = compile_stmts(s.entry);
      cs.during = compile_stmts(s.during);
      cs.exit = compile_stmts(s.exit);
      states_.emplace(s.id, std::move(cs));
    }
    for (const Transition& t : chart.transitions) {
      CompiledTransition ct;
      ct.t = &t;
      if (t.condition) {
        auto parsed = parse_expr(*t.condition);
        if (!parsed) {
          throw SimulatorError{"simulating an unvalidated chart: " + *t.condition};
        }
        ct.condition = std::move(parsed.value());
      }
      ct.condition_action = compile_stmts(t.condition_action);
      ct.transition_action = compile_stmts(t.transition_action);
      ct.dest_is_state = chart.find_state(t.dest) != nullptr;
      transitions_.push_back(std::move(ct));
    }
    for (auto& ct : transitions_) {
      if (ct.t->source.is_default()) {
        default_ = &ct;
      } else {
        outgoing_[ct.t->source.id].push_back(&ct);
      }
    }
    for (auto& [id, list] : outgoing_) {
      std::sort(list.begin(), list.end(),
                [](const CompiledTransition* a, const CompiledTransition* b) {
                  return a->t->priority < b->t->priority;
                });
    }
    if (default_ == nullptr) {
      throw SimulatorError{"chart has no default transition"};
    }
    for (const Variable& v : chart.variables) {
      if (v.kind == VarKind::Input) input_names_.push_back(v.name);
      if (v.kind == VarKind::Output) output_names_.push_back(v.name);
    }
  }

  const Chart& chart() const { return *chart_; }
  const CompiledTransition* default_transition() const { return default_; }
  const CompiledState& state(const std::string& id) const {
    return states_.at(id);
  }
  const std::vector<CompiledTransition*>& outgoing(const std::string& id) const {
    static const std::vector<CompiledTransition*> kNone;
    auto it = outgoing_.find(id);
    return it == outgoing_.end() ? kNone : it->second;
  }
  const std::vector<std::string>& input_names() const { return input_names_; }
  const std::vector<std::string>& output_names() const { return output_names_; }

 private:
  const Chart* chart_;
  std::map<std::string, CompiledState> states_;
  std::vector<CompiledTransition> transitions_;
  std::map<std::string, std::vector<CompiledTransition*>> outgoing_;
  const CompiledTransition* default_ = nullptr;
  std::vector<std::string> input_names_;
  std::vector<std::string> output_names_;
};

class StepRunner {
 public:
  StepRunner(const CompiledChart& cc, CoverageAccumulator* cov)
      : cc_(cc), cov_(cov) {}

  Trace run(const TestCase& test) {
    if (test.steps < 1 || test.steps > kMaxStepsPerTest) {
      throw SimulatorError{"test '" + test.name + "' must have 1.." +
                           std::to_string(kMaxStepsPerTest) + " steps"};
    }
    for (const auto& name : cc_.input_names()) {
      auto it = test.inputs.find(name);
      if (it == test.inputs.end() ||
          static_cast<int>(it->second.size()) != test.steps) {
        throw SimulatorError{"test '" + test.name + "' must provide " +
                             std::to_string(test.steps) + " values for input '" +
                             name + "'"};
      }
    }

    env_.values.clear();
    for (const Variable& v : cc_.chart().variables) {
      env_.values.emplace(v.name, v.initial);
    }
    Trace trace;
    for (const auto& name : cc_.output_names()) trace.outputs[name];

    std::string active;
    for (int step = 0; step < test.steps; ++step) {
      for (const auto& name : cc_.input_names()) {
        env_.values[name] = test.inputs.at(name)[static_cast<std::size_t>(step)];
      }
      try {
        if (step == 0) {
          // Initialization consumes step 0: take the default transition,
          // then the initial state's entry actions. No transition search.
          const CompiledTransition* def = cc_.default_transition();
          element_ = def->t->id;
          exec_stmts(def->condition_action, env_);
          exec_stmts(def->transition_action, env_);
          if (cov_) cov_->fired_transitions.insert(def->t->id);
          enter(def->t->dest);
          active = def->t->dest;
        } else {
          std::vector<const CompiledTransition*> path;
          if (search(active, path)) {
            element_ = active;
            exec_stmts(cc_.state(active).exit, env_);
            for (const CompiledTransition* ct : path) {
              element_ = ct->t->id;
              exec_stmts(ct->transition_action, env_);
            }
            const std::string& dest = path.back()->t->dest;
            enter(dest);
            active = dest;
          } else {
            element_ = active;
            exec_stmts(cc_.state(active).during, env_);
          }
        }
      } catch (const EvalError& e) {
        trace.runtime_error = RuntimeFault{step, element_, e.message};
        break;
      }
      for (const auto& name : cc_.output_names()) {
        trace.outputs[name].push_back(env_.values.at(name));
      }
      trace.active_state.push_back(active);
    }
    return trace;
  }

 private:
  void enter(const std::string& state_id) {
    element_ = state_id;
    exec_stmts(cc_.state(state_id).entry, env_);
    if (cov_) cov_->entered_states.insert(state_id);
  }

  bool enabled(const CompiledTransition& ct) {
    if (ct.t->event) {
      const Value& v = env_.values.at(*ct.t->event);
      if (!v.as_boolean()) return false;
    }
    if (!ct.condition) return true;
    element_ = ct.t->id;
    bool result = eval_expr(*ct.condition, env_).as_boolean();
    if (cov_) {
      (result ? cov_->condition_true : cov_->condition_false).insert(ct.t->id);
    }
    return result;
  }

  /// Depth-first path search over junctions in ascending priority. A branch
  /// that dead-ends rolls the env back to the snapshot taken before its
  /// condition action ran, so failed probes leave no observable effect.
  /// Junction acyclicity (validated) bounds the recursion.
  bool search(const std::string& element_id,
              std::vector<const CompiledTransition*>& path) {
    for (const CompiledTransition* ct : cc_.outgoing(element_id)) {
      if (!enabled(*ct)) continue;
      Env snapshot = env_;
      element_ = ct->t->id;
      exec_stmts(ct->condition_action, env_);
      path.push_back(ct);
      if (ct->dest_is_state) {
        if (cov_) {
          for (const CompiledTransition* fired : path) {
            cov_->fired_transitions.insert(fired->t->id);
          }
        }
        return true;
      }
      if (search(ct->t->dest, path)) return true;
      path.pop_back();
      env_ = std::move(snapshot);
    }
    return false;
  }

  const CompiledChart& cc_;
  CoverageAccumulator* cov_;
  Env env_;
  std::string element_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

/// Deterministic discrete-step execution of a validated chart against one
/// test. Identical (chart, test) pairs always produce identical traces.
inline Trace simulate(const Chart& chart, const TestCase& test) {
  detail::CompiledChart cc(chart);
  return detail::StepRunner(cc, nullptr).run(test);
}

/// Trace comparison used by the kill oracle: any output differing beyond the
/// absolute tolerance at any executed step, or a difference in executed
/// length (runtime errors truncate), distinguishes the traces.
inline bool traces_differ(const Trace& a, const Trace& b, double tol) {
  if (a.executed_steps() != b.executed_steps()) return true;
  if (a.outputs.size() != b.outputs.size()) return true;
  for (const auto& [name, seq_a] : a.outputs) {
    auto it = b.outputs.find(name);
    if (it == b.outputs.end()) return true;
    const auto& seq_b = it->second;
    if (seq_a.size() != seq_b.size()) return true;
    for (std::size_t i = 0; i < seq_a.size(); ++i) {
      const Value& va = seq_a[i];
      const Value& vb = seq_b[i];
      if (va.type() != vb.type()) return true;
      if (va.is_boolean()) {
        if (va.as_boolean() != vb.as_boolean()) return true;
      } else if (std::abs(va.as_number() - vb.as_number()) > tol) {
        return true;
      }
    }
  }
  return false;
}

/// One verdict per test: killed when the mutant's outputs differ from the
/// original beyond tol, or when exactly one of the runs hits a runtime error.
inline std::vector<TestVerdict> verdicts(const Chart& original,
                                         const Chart& mutant,
                                         const std::vector<TestCase>& suite,
                                         double tol) {
  auto interface_of = [](const Chart& c) {
    std::vector<std::pair<std::string, std::pair<VarKind, ValueType>>> out;
    for (const auto& v : c.variables) out.push_back({v.name, {v.kind, v.type}});
    std::sort(out.begin(), out.end());
    return out;
  };
  if (interface_of(original) != interface_of(mutant)) {
    throw InterfaceMismatch{"charts declare different variable interfaces"};
  }
  detail::CompiledChart orig(original);
  detail::CompiledChart mut(mutant);
  std::vector<TestVerdict> out;
  out.reserve(suite.size());
  for (const TestCase& test : suite) {
    Trace a = detail::StepRunner(orig, nullptr).run(test);
    Trace b = detail::StepRunner(mut, nullptr).run(test);
    out.push_back(traces_differ(a, b, tol) ? TestVerdict::Killed
                                           : TestVerdict::Alive);
  }
  return out;
}

/// Decision coverage counts each transition condition's observed outcomes
/// (true and false, anywhere a search evaluated it); an unconditioned
/// transition contributes the single outcome "fired". Execution coverage is
/// entered states plus fired transitions over all states plus transitions.
inline CoverageReport coverage(const Chart& chart,
                               const std::vector<TestCase>& suite) {
  detail::CompiledChart cc(chart);
  detail::CoverageAccumulator acc;
  for (const TestCase& test : suite) {
    detail::StepRunner(cc, &acc).run(test);
  }

  int decision_total = 0;
  int decision_covered = 0;
  std::set<std::string> uncovered;
  for (const Transition& t : chart.transitions) {
    if (t.condition) {
      decision_total += 2;
      bool seen_true = acc.condition_true.count(t.id) > 0;
      bool seen_false = acc.condition_false.count(t.id) > 0;
      decision_covered += (seen_true ? 1 : 0) + (seen_false ? 1 : 0);
      if (!seen_true || !seen_false) uncovered.insert(t.id);
    } else {
      decision_total += 1;
      bool fired = acc.fired_transitions.count(t.id) > 0;
      decision_covered += fired ? 1 : 0;
      if (!fired) uncovered.insert(t.id);
    }
    if (acc.fired_transitions.count(t.id) == 0) uncovered.insert(t.id);
  }
  int execution_total = static_cast<int>(chart.states.size() + chart.transitions.size());
  int execution_covered = 0;
  for (const State& s : chart.states) {
    if (acc.entered_states.count(s.id) > 0) {
      ++execution_covered;
    } else {
      uncovered.insert(s.id);
    }
  }
  for (const Transition& t : chart.transitions) {
    if (acc.fired_transitions.count(t.id) > 0) ++execution_covered;
  }

  CoverageReport report;
  report.decision_coverage =
      decision_total == 0 ? 1.0
                          : static_cast<double>(decision_covered) / decision_total;
  report.execution_coverage =
      execution_total == 0
          ? 1.0
          : static_cast<double>(execution_covered) / execution_total;
  report.uncovered.assign(uncovered.begin(), uncovered.end());
  return report;
}

}  // namespace flowmut

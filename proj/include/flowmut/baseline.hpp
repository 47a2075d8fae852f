// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "flowmut/chart.hpp"
#include "flowmut/chart_json.hpp"
#include "flowmut/expr.hpp"
#include "flowmut/rng.hpp"

namespace flowmut {

/// Provenance of one applied mutation. `before` and `after` hold the whole
/// element in canonical JSON; `field` names the slot the operator touched.
/// The same records double as few-shot example material for prompts.
struct MutationRecord {
  std::string operator_id;
  std::string element_id;
  std::string field;
  std::string before;
  std::string after;
};

struct NoApplicableMutation {
  std::string message;
};

struct BaselineResult {
  Chart mutant;
  std::vector<MutationRecord> records;
};

// ---------------------------------------------------------------------------
// Operator catalog
// ---------------------------------------------------------------------------
//
// 8 state operators and 11 transition operators. Every operator preserves
// both validation stages by construction; runtime behavior (including
// division by zero introduced by S8/T4) may of course change, which is the
// point.

struct MutationOperator {
  std::string id;
  ElementKind target_kind;
  std::function<bool(const Chart&, const std::string& element_id)> applicable;
  // Only called when applicable; must change at least one field.
  std::function<MutationRecord(Chart&, const std::string& element_id, Rng&)> apply;
};

namespace detail {

inline std::vector<Stmt> parse_action_list(const std::vector<std::string>& src) {
  std::vector<Stmt> out;
  for (const auto& text : src) {
    auto parsed = parse_stmts(text);
    if (!parsed) continue;  // operators only target valid charts
    for (auto& s : parsed.value()) out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<std::string> render_action_list(const std::vector<Stmt>& stmts) {
  std::vector<std::string> out;
  out.reserve(stmts.size());
  for (const Stmt& s : stmts) out.push_back(print_stmt(s));
  return out;
}

// entry, during, exit as parsed statement lists
struct StateActions {
  std::array<std::vector<Stmt>, 3> slots;

  static constexpr const char* kSlotNames[3] = {"entry", "during", "exit"};

  static StateActions parse(const State& s) {
    StateActions a;
    a.slots[0] = parse_action_list(s.entry);
    a.slots[1] = parse_action_list(s.during);
    a.slots[2] = parse_action_list(s.exit);
    return a;
  }

  std::size_t total() const {
    return slots[0].size() + slots[1].size() + slots[2].size();
  }

  // global statement index -> (slot, index)
  std::pair<int, std::size_t> locate(std::size_t global) const {
    for (int slot = 0; slot < 3; ++slot) {
      if (global < slots[slot].size()) return {slot, global};
      global -= slots[slot].size();
    }
    return {-1, 0};
  }

  void store(State& s) const {
    s.entry = render_action_list(slots[0]);
    s.during = render_action_list(slots[1]);
    s.exit = render_action_list(slots[2]);
  }
};

template <class Pred>
std::vector<Expr*> collect_sites(std::vector<Stmt>& stmts, Pred&& pred) {
  std::vector<Expr*> out;
  for (Stmt& s : stmts) {
    auto sites = collect_exprs(*s.rhs, pred);
    out.insert(out.end(), sites.begin(), sites.end());
  }
  return out;
}

inline bool has_literal(const std::vector<std::string>& action_strings) {
  auto stmts = parse_action_list(action_strings);
  return !collect_sites(stmts, [](const Expr& e) { return e.is_literal(); }).empty();
}

inline void perturb_literal(Expr& site, Rng& rng) {
  Value& v = site.literal().value;
  if (v.is_boolean()) {
    v = Value::boolean(!v.as_boolean());
  } else {
    v = Value::number(v.as_number() + (rng.coin() ? 1.0 : -1.0));
  }
}

inline BinaryOp negate_relational(BinaryOp op) {
  switch (op) {
    case BinaryOp::Eq: return BinaryOp::Ne;
    case BinaryOp::Ne: return BinaryOp::Eq;
    case BinaryOp::Lt: return BinaryOp::Ge;
    case BinaryOp::Ge: return BinaryOp::Lt;
    case BinaryOp::Le: return BinaryOp::Gt;
    case BinaryOp::Gt: return BinaryOp::Le;
    default: return op;
  }
}

/// True when junction `from` can reach junction `to` over junction->junction
/// edges, ignoring the transition named `excluded`.
inline bool junction_reaches(const Chart& chart, const std::string& from,
                             const std::string& to, const std::string& excluded) {
  std::vector<std::string> stack{from};
  std::set<std::string> seen;
  while (!stack.empty()) {
    std::string at = stack.back();
    stack.pop_back();
    if (at == to) return true;
    if (!seen.insert(at).second) continue;
    for (const Transition& t : chart.transitions) {
      if (t.id == excluded) continue;
      if (t.source.is_element() && t.source.id == at &&
          chart.find_junction(t.dest) != nullptr) {
        stack.push_back(t.dest);
      }
    }
  }
  return false;
}

/// Destinations a transition may legally be retargeted to: any other state
/// or junction, restricted to states when the source is the default
/// transition, and never closing a junction cycle.
inline std::vector<std::string> legal_dests(const Chart& chart, const Transition& t) {
  std::vector<std::string> out;
  for (const State& s : chart.states) {
    if (s.id != t.dest) out.push_back(s.id);
  }
  if (!t.source.is_default()) {
    for (const Junction& j : chart.junctions) {
      if (j.id == t.dest) continue;
      if (t.source.is_element() && chart.find_junction(t.source.id) != nullptr) {
        // adding source -> j must not close a junction cycle
        if (j.id == t.source.id ||
            junction_reaches(chart, j.id, t.source.id, t.id)) {
          continue;
        }
      }
      out.push_back(j.id);
    }
  }
  return out;
}

inline MutationRecord record_state_change(const State& before, const State& after,
                                          const std::string& op,
                                          const std::string& field) {
  return MutationRecord{op, before.id, field, state_to_json(before).dump(),
                        state_to_json(after).dump()};
}

inline MutationRecord record_transition_change(const Transition& before,
                                               const Transition& after,
                                               const std::string& op,
                                               const std::string& field) {
  return MutationRecord{op, before.id, field, transition_to_json(before).dump(),
                        transition_to_json(after).dump()};
}

inline std::vector<MutationOperator> build_state_operators() {
  std::vector<MutationOperator> ops;

  // S1: perturb a constant inside an action (c -> c+-1, booleans flip)
  ops.push_back(
      {"S1", ElementKind::State,
       [](const Chart& c, const std::string& id) {
         const State* s = c.find_state(id);
         return s != nullptr && (has_literal(s->entry) || has_literal(s->during) ||
                                 has_literal(s->exit));
       },
       [](Chart& c, const std::string& id, Rng& rng) {
         State& s = *c.find_state(id);
         State before = s;
         auto actions = StateActions::parse(s);
         struct Site { int slot; Expr* expr; };
         std::vector<Site> sites;
         for (int slot = 0; slot < 3; ++slot) {
           for (Expr* e : collect_sites(actions.slots[slot],
                                        [](const Expr& x) { return x.is_literal(); })) {
             sites.push_back({slot, e});
           }
         }
         const Site& pick = sites[rng.index(sites.size())];
         perturb_literal(*pick.expr, rng);
         actions.store(s);
         return record_state_change(before, s, "S1",
                                    StateActions::kSlotNames[pick.slot]);
       }});

  // S2: negate the right-hand side of a boolean assignment
  ops.push_back(
      {"S2", ElementKind::State,
       [](const Chart& c, const std::string& id) {
         const State* s = c.find_state(id);
         if (s == nullptr) return false;
         auto actions = StateActions::parse(*s);
         for (const auto& slot : actions.slots) {
           for (const Stmt& st : slot) {
             const Variable* v = c.find_variable(st.target);
             if (v != nullptr && v->type == ValueType::Boolean) return true;
           }
         }
         return false;
       },
       [](Chart& c, const std::string& id, Rng& rng) {
         State& s = *c.find_state(id);
         State before = s;
         auto actions = StateActions::parse(s);
         struct Site { int slot; Stmt* stmt; };
         std::vector<Site> sites;
         for (int slot = 0; slot < 3; ++slot) {
           for (Stmt& st : actions.slots[slot]) {
             const Variable* v = c.find_variable(st.target);
             if (v != nullptr && v->type == ValueType::Boolean) {
               sites.push_back({slot, &st});
             }
           }
         }
         const Site& pick = sites[rng.index(sites.size())];
         pick.stmt->rhs = make_not(std::move(pick.stmt->rhs));
         actions.store(s);
         return record_state_change(before, s, "S2",
                                    StateActions::kSlotNames[pick.slot]);
       }});

  // S3 / S4: swap whole action slots
  auto swap_slots = [](const char* op_id, int slot_a, int slot_b) {
    return MutationOperator{
        op_id, ElementKind::State,
        [slot_a, slot_b](const Chart& c, const std::string& id) {
          const State* s = c.find_state(id);
          if (s == nullptr) return false;
          const std::vector<std::string>* slots[3] = {&s->entry, &s->during, &s->exit};
          return *slots[slot_a] != *slots[slot_b];
        },
        [op_id, slot_a, slot_b](Chart& c, const std::string& id, Rng&) {
          State& s = *c.find_state(id);
          State before = s;
          std::vector<std::string>* slots[3] = {&s.entry, &s.during, &s.exit};
          std::swap(*slots[slot_a], *slots[slot_b]);
          std::string field = std::string(StateActions::kSlotNames[slot_a]) + "," +
                              StateActions::kSlotNames[slot_b];
          return record_state_change(before, s, op_id, field);
        }};
  };
  ops.push_back(swap_slots("S3", 0, 1));
  ops.push_back(swap_slots("S4", 1, 2));

  // S5 / S6: delete or duplicate one statement
  auto stmt_count_at_least_one = [](const Chart& c, const std::string& id) {
    const State* s = c.find_state(id);
    return s != nullptr && StateActions::parse(*s).total() >= 1;
  };
  ops.push_back(
      {"S5", ElementKind::State, stmt_count_at_least_one,
       [](Chart& c, const std::string& id, Rng& rng) {
         State& s = *c.find_state(id);
         State before = s;
         auto actions = StateActions::parse(s);
         auto [slot, index] = actions.locate(rng.index(actions.total()));
         actions.slots[slot].erase(actions.slots[slot].begin() +
                                   static_cast<std::ptrdiff_t>(index));
         actions.store(s);
         return record_state_change(before, s, "S5",
                                    StateActions::kSlotNames[slot]);
       }});
  ops.push_back(
      {"S6", ElementKind::State, stmt_count_at_least_one,
       [](Chart& c, const std::string& id, Rng& rng) {
         State& s = *c.find_state(id);
         State before = s;
         auto actions = StateActions::parse(s);
         auto [slot, index] = actions.locate(rng.index(actions.total()));
         Stmt copy = clone(actions.slots[slot][index]);
         actions.slots[slot].insert(
             actions.slots[slot].begin() + static_cast<std::ptrdiff_t>(index) + 1,
             std::move(copy));
         actions.store(s);
         return record_state_change(before, s, "S6",
                                    StateActions::kSlotNames[slot]);
       }});

  // S7: retarget an assignment to another writable variable of like type
  ops.push_back(
      {"S7", ElementKind::State,
       [](const Chart& c, const std::string& id) {
         const State* s = c.find_state(id);
         if (s == nullptr) return false;
         auto actions = StateActions::parse(*s);
         for (const auto& slot : actions.slots) {
           for (const Stmt& st : slot) {
             const Variable* v = c.find_variable(st.target);
             if (v == nullptr) continue;
             for (const Variable& w : c.variables) {
               if (w.name != v->name && w.kind != VarKind::Input &&
                   w.type == v->type) {
                 return true;
               }
             }
           }
         }
         return false;
       },
       [](Chart& c, const std::string& id, Rng& rng) {
         State& s = *c.find_state(id);
         State before = s;
         auto actions = StateActions::parse(s);
         struct Site { int slot; Stmt* stmt; };
         std::vector<Site> sites;
         for (int slot = 0; slot < 3; ++slot) {
           for (Stmt& st : actions.slots[slot]) {
             const Variable* v = c.find_variable(st.target);
             if (v == nullptr) continue;
             for (const Variable& w : c.variables) {
               if (w.name != v->name && w.kind != VarKind::Input &&
                   w.type == v->type) {
                 sites.push_back({slot, &st});
                 break;
               }
             }
           }
         }
         const Site& pick = sites[rng.index(sites.size())];
         const Variable* old_var = c.find_variable(pick.stmt->target);
         std::vector<std::string> candidates;
         for (const Variable& w : c.variables) {
           if (w.name != old_var->name && w.kind != VarKind::Input &&
               w.type == old_var->type) {
             candidates.push_back(w.name);
           }
         }
         pick.stmt->target = candidates[rng.index(candidates.size())];
         actions.store(s);
         return record_state_change(before, s, "S7",
                                    StateActions::kSlotNames[pick.slot]);
       }});

  // S8: replace an arithmetic operator inside an action right-hand side
  ops.push_back(
      {"S8", ElementKind::State,
       [](const Chart& c, const std::string& id) {
         const State* s = c.find_state(id);
         if (s == nullptr) return false;
         auto actions = StateActions::parse(*s);
         for (auto& slot : actions.slots) {
           if (!collect_sites(slot, [](const Expr& e) {
                 return e.is_binary() && is_arithmetic(e.binary().op);
               }).empty()) {
             return true;
           }
         }
         return false;
       },
       [](Chart& c, const std::string& id, Rng& rng) {
         State& s = *c.find_state(id);
         State before = s;
         auto actions = StateActions::parse(s);
         struct Site { int slot; Expr* expr; };
         std::vector<Site> sites;
         for (int slot = 0; slot < 3; ++slot) {
           for (Expr* e : collect_sites(actions.slots[slot], [](const Expr& x) {
                  return x.is_binary() && is_arithmetic(x.binary().op);
                })) {
             sites.push_back({slot, e});
           }
         }
         const Site& pick = sites[rng.index(sites.size())];
         static const BinaryOp kArith[] = {BinaryOp::Add, BinaryOp::Sub,
                                           BinaryOp::Mul, BinaryOp::Div,
                                           BinaryOp::Mod};
         BinaryOp current = pick.expr->binary().op;
         BinaryOp next;
         do {
           next = kArith[rng.index(5)];
         } while (next == current);
         pick.expr->binary().op = next;
         actions.store(s);
         return record_state_change(before, s, "S8",
                                    StateActions::kSlotNames[pick.slot]);
       }});

  return ops;
}

inline std::vector<MutationOperator> build_transition_operators() {
  std::vector<MutationOperator> ops;

  auto condition_has = [](const Chart& c, const std::string& id, auto&& pred) {
    const Transition* t = c.find_transition(id);
    if (t == nullptr || !t->condition) return false;
    auto parsed = parse_expr(*t->condition);
    if (!parsed) return false;
    return !collect_exprs(*parsed.value(), pred).empty();
  };

  auto rewrite_condition = [](Chart& c, const std::string& id, Rng& rng,
                              const std::string& op_id, auto&& pred,
                              auto&& rewrite) {
    Transition& t = *c.find_transition(id);
    Transition before = t;
    auto parsed = parse_expr(*t.condition);
    ExprPtr root = std::move(parsed.value());
    auto sites = collect_exprs(*root, pred);
    rewrite(*sites[rng.index(sites.size())], rng);
    t.condition = print_expr(*root);
    return record_transition_change(before, t, op_id, "condition");
  };

  // T1: negate one relational operator
  ops.push_back(
      {"T1", ElementKind::Transition,
       [condition_has](const Chart& c, const std::string& id) {
         return condition_has(c, id, [](const Expr& e) {
           return e.is_binary() && is_relational(e.binary().op);
         });
       },
       [rewrite_condition](Chart& c, const std::string& id, Rng& rng) {
         return rewrite_condition(
             c, id, rng, "T1",
             [](const Expr& e) {
               return e.is_binary() && is_relational(e.binary().op);
             },
             [](Expr& e, Rng&) {
               e.binary().op = negate_relational(e.binary().op);
             });
       }});

  // T2: replace one relational operator with a different one
  ops.push_back(
      {"T2", ElementKind::Transition,
       [condition_has](const Chart& c, const std::string& id) {
         return condition_has(c, id, [](const Expr& e) {
           return e.is_binary() && is_relational(e.binary().op);
         });
       },
       [rewrite_condition](Chart& c, const std::string& id, Rng& rng) {
         return rewrite_condition(
             c, id, rng, "T2",
             [](const Expr& e) {
               return e.is_binary() && is_relational(e.binary().op);
             },
             [](Expr& e, Rng& r) {
               static const BinaryOp kRel[] = {BinaryOp::Lt, BinaryOp::Le,
                                               BinaryOp::Gt, BinaryOp::Ge,
                                               BinaryOp::Eq, BinaryOp::Ne};
               BinaryOp current = e.binary().op;
               BinaryOp next;
               do {
                 next = kRel[r.index(6)];
               } while (next == current);
               e.binary().op = next;
             });
       }});

  // T3: flip one logical operator (&& <-> ||)
  ops.push_back(
      {"T3", ElementKind::Transition,
       [condition_has](const Chart& c, const std::string& id) {
         return condition_has(c, id, [](const Expr& e) {
           return e.is_binary() && is_logical(e.binary().op);
         });
       },
       [rewrite_condition](Chart& c, const std::string& id, Rng& rng) {
         return rewrite_condition(
             c, id, rng, "T3",
             [](const Expr& e) {
               return e.is_binary() && is_logical(e.binary().op);
             },
             [](Expr& e, Rng&) {
               e.binary().op = e.binary().op == BinaryOp::And ? BinaryOp::Or
                                                              : BinaryOp::And;
             });
       }});

  // T4: perturb a constant inside the condition
  ops.push_back(
      {"T4", ElementKind::Transition,
       [condition_has](const Chart& c, const std::string& id) {
         return condition_has(c, id,
                              [](const Expr& e) { return e.is_literal(); });
       },
       [rewrite_condition](Chart& c, const std::string& id, Rng& rng) {
         return rewrite_condition(
             c, id, rng, "T4",
             [](const Expr& e) { return e.is_literal(); },
             [](Expr& e, Rng& r) { perturb_literal(e, r); });
       }});

  // T5: drop the condition entirely (always true)
  ops.push_back(
      {"T5", ElementKind::Transition,
       [](const Chart& c, const std::string& id) {
         const Transition* t = c.find_transition(id);
         return t != nullptr && t->condition.has_value();
       },
       [](Chart& c, const std::string& id, Rng&) {
         Transition& t = *c.find_transition(id);
         Transition before = t;
         t.condition.reset();
         return record_transition_change(before, t, "T5", "condition");
       }});

  // T6: negate the whole condition
  ops.push_back(
      {"T6", ElementKind::Transition,
       [](const Chart& c, const std::string& id) {
         const Transition* t = c.find_transition(id);
         return t != nullptr && t->condition.has_value();
       },
       [](Chart& c, const std::string& id, Rng&) {
         Transition& t = *c.find_transition(id);
         Transition before = t;
         auto parsed = parse_expr(*t.condition);
         t.condition = print_expr(*make_not(std::move(parsed.value())));
         return record_transition_change(before, t, "T6", "condition");
       }});

  // T7: retarget the destination
  ops.push_back(
      {"T7", ElementKind::Transition,
       [](const Chart& c, const std::string& id) {
         const Transition* t = c.find_transition(id);
         return t != nullptr && !legal_dests(c, *t).empty();
       },
       [](Chart& c, const std::string& id, Rng& rng) {
         Transition& t = *c.find_transition(id);
         Transition before = t;
         auto dests = legal_dests(c, t);
         t.dest = dests[rng.index(dests.size())];
         return record_transition_change(before, t, "T7", "dest");
       }});

  // T8: retarget the source to another state (the default transition keeps
  // its sourceless role and is never eligible)
  ops.push_back(
      {"T8", ElementKind::Transition,
       [](const Chart& c, const std::string& id) {
         const Transition* t = c.find_transition(id);
         if (t == nullptr || t->source.is_default() || t->source.is_missing()) {
           return false;
         }
         for (const State& s : c.states) {
           if (s.id != t->source.id) return true;
         }
         return false;
       },
       [](Chart& c, const std::string& id, Rng& rng) {
         Transition& t = *c.find_transition(id);
         Transition before = t;
         std::vector<std::string> candidates;
         for (const State& s : c.states) {
           if (s.id != t.source.id) candidates.push_back(s.id);
         }
         t.source = TransitionSource::element(candidates[rng.index(candidates.size())]);
         // keep same-source priorities distinct
         std::set<int> taken;
         for (const Transition& other : c.transitions) {
           if (other.id != t.id && other.source == t.source) {
             taken.insert(other.priority);
           }
         }
         if (taken.count(t.priority) > 0) {
           t.priority = taken.empty() ? 1 : *taken.rbegin() + 1;
         }
         return record_transition_change(before, t, "T8", "source");
       }});

  // T9: swap priorities with a same-source sibling
  ops.push_back(
      {"T9", ElementKind::Transition,
       [](const Chart& c, const std::string& id) {
         const Transition* t = c.find_transition(id);
         if (t == nullptr || t->source.is_default() || t->source.is_missing()) {
           return false;
         }
         for (const Transition& other : c.transitions) {
           if (other.id != t->id && other.source == t->source) return true;
         }
         return false;
       },
       [](Chart& c, const std::string& id, Rng& rng) {
         Transition& t = *c.find_transition(id);
         Transition before = t;
         std::vector<Transition*> siblings;
         for (Transition& other : c.transitions) {
           if (other.id != t.id && other.source == t.source) {
             siblings.push_back(&other);
           }
         }
         Transition* partner = siblings[rng.index(siblings.size())];
         std::swap(t.priority, partner->priority);
         MutationRecord rec = record_transition_change(before, t, "T9", "priority");
         rec.field = "priority(with " + partner->id + ")";
         return rec;
       }});

  // T10: delete one condition-action statement
  ops.push_back(
      {"T10", ElementKind::Transition,
       [](const Chart& c, const std::string& id) {
         const Transition* t = c.find_transition(id);
         return t != nullptr && !parse_action_list(t->condition_action).empty();
       },
       [](Chart& c, const std::string& id, Rng& rng) {
         Transition& t = *c.find_transition(id);
         Transition before = t;
         auto stmts = parse_action_list(t.condition_action);
         stmts.erase(stmts.begin() +
                     static_cast<std::ptrdiff_t>(rng.index(stmts.size())));
         t.condition_action = render_action_list(stmts);
         return record_transition_change(before, t, "T10", "condition_action");
       }});

  // T11: move one statement between condition_action and transition_action
  ops.push_back(
      {"T11", ElementKind::Transition,
       [](const Chart& c, const std::string& id) {
         const Transition* t = c.find_transition(id);
         if (t == nullptr) return false;
         return !parse_action_list(t->condition_action).empty() ||
                !parse_action_list(t->transition_action).empty();
       },
       [](Chart& c, const std::string& id, Rng& rng) {
         Transition& t = *c.find_transition(id);
         Transition before = t;
         auto cond = parse_action_list(t.condition_action);
         auto trans = parse_action_list(t.transition_action);
         bool from_cond;
         if (cond.empty()) {
           from_cond = false;
         } else if (trans.empty()) {
           from_cond = true;
         } else {
           from_cond = rng.coin();
         }
         auto& from = from_cond ? cond : trans;
         auto& to = from_cond ? trans : cond;
         std::size_t pick = rng.index(from.size());
         to.push_back(clone(from[pick]));
         from.erase(from.begin() + static_cast<std::ptrdiff_t>(pick));
         t.condition_action = render_action_list(cond);
         t.transition_action = render_action_list(trans);
         return record_transition_change(
             before, t, "T11",
             from_cond ? "condition_action->transition_action"
                       : "transition_action->condition_action");
       }});

  return ops;
}

}  // namespace detail

inline const std::vector<MutationOperator>& state_operators() {
  static const std::vector<MutationOperator> ops = detail::build_state_operators();
  return ops;
}

inline const std::vector<MutationOperator>& transition_operators() {
  static const std::vector<MutationOperator> ops =
      detail::build_transition_operators();
  return ops;
}

// ---------------------------------------------------------------------------
// Generation loop
// ---------------------------------------------------------------------------

namespace detail {

/// One iteration of the generation loop: uniformly pick state-vs-transition,
/// then a target element (retrying over elements with no applicable
/// operator), then a uniformly chosen applicable operator.
inline MutationRecord apply_random_mutation(Chart& chart, Rng& rng) {
  auto applicable_elements = [&](ElementKind kind) {
    const auto& ops = kind == ElementKind::State ? state_operators()
                                                 : transition_operators();
    std::vector<std::string> out;
    auto consider = [&](const std::string& id) {
      for (const auto& op : ops) {
        if (op.applicable(chart, id)) {
          out.push_back(id);
          return;
        }
      }
    };
    if (kind == ElementKind::State) {
      for (const State& s : chart.states) consider(s.id);
    } else {
      for (const Transition& t : chart.transitions) consider(t.id);
    }
    return out;
  };

  ElementKind kind =
      rng.coin() ? ElementKind::Transition : ElementKind::State;
  auto elements = applicable_elements(kind);
  if (elements.empty()) {
    kind = kind == ElementKind::State ? ElementKind::Transition
                                      : ElementKind::State;
    elements = applicable_elements(kind);
  }
  if (elements.empty()) {
    throw NoApplicableMutation{"no mutation operator applies anywhere in '" +
                               chart.name + "'"};
  }
  const std::string element = elements[rng.index(elements.size())];
  const auto& catalog = kind == ElementKind::State ? state_operators()
                                                   : transition_operators();
  std::vector<const MutationOperator*> applicable;
  for (const auto& op : catalog) {
    if (op.applicable(chart, element)) applicable.push_back(&op);
  }
  const MutationOperator* op = applicable[rng.index(applicable.size())];
  return op->apply(chart, element, rng);
}

}  // namespace detail

/// Baseline mutant generation. Applies one mutation, then keeps going while
/// a fresh uniform draw p satisfies p < 0.5^n (n mutations so far); with
/// first_order_only the loop stops after one. Identical (model, seed, flag)
/// always yields the identical mutant.
inline BaselineResult generate_baseline(const Chart& model, std::uint64_t seed,
                                        bool first_order_only) {
  BaselineResult result{model, {}};
  Rng rng(seed);
  int applied = 0;
  for (;;) {
    result.records.push_back(detail::apply_random_mutation(result.mutant, rng));
    ++applied;
    if (first_order_only) break;
    double p = rng.uniform01();
    if (!(p < std::pow(0.5, applied))) break;
  }
  return result;
}

struct MutationCountStats {
  std::map<int, int> histogram;
  int runs = 0;

  double mean() const {
    double total = 0;
    for (const auto& [count, times] : histogram) total += count * double(times);
    return runs == 0 ? 0.0 : total / runs;
  }
  double p_at_least(int k) const {
    int hits = 0;
    for (const auto& [count, times] : histogram) {
      if (count >= k) hits += times;
    }
    return runs == 0 ? 0.0 : static_cast<double>(hits) / runs;
  }
};

/// Runs only the stopping rule (no mutations applied), once per seed in
/// [base_seed, base_seed + seeds). The analytic mean is
/// sum_{k>=0} 0.5^(k(k+1)/2), about 1.6417; with first_order_only the count
/// is always exactly one.
inline MutationCountStats mutation_count_distribution(int seeds,
                                                      std::uint64_t base_seed = 0,
                                                      bool first_order_only = false) {
  MutationCountStats stats;
  stats.runs = seeds;
  for (int i = 0; i < seeds; ++i) {
    Rng rng(base_seed + static_cast<std::uint64_t>(i));
    int n = 1;  // the loop body always applies its first mutation
    if (!first_order_only) {
      while (rng.uniform01() < std::pow(0.5, n)) ++n;
    }
    stats.histogram[n] += 1;
  }
  return stats;
}

}  // namespace flowmut

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cassert>
#include <cmath>
#include <map>
#include <set>
#include <span>
#include <string>

#include "flowmut/expr.hpp"
#include "flowmut/value.hpp"

namespace flowmut {

/// Runtime fault raised during evaluation (division or modulo by zero).
/// The simulator catches it and records the enclosing element.
struct EvalError {
  std::string message;
};

/// Variable store for one simulation. Holds exactly the chart's declared
/// variables; reads and writes are recorded for accounting.
struct Env {
  std::map<std::string, Value> values;
  std::set<std::string> reads;
  std::set<std::string> writes;

  const Value& get(const std::string& name) {
    auto it = values.find(name);
    assert(it != values.end() && "evaluating an unvalidated chart");
    reads.insert(name);
    return it->second;
  }

  void set(const std::string& name, Value v) {
    auto it = values.find(name);
    assert(it != values.end() && "executing an unvalidated chart");
    writes.insert(name);
    it->second = v;
  }
};

/// Evaluates a type-checked expression. Logical operators short-circuit.
/// Throws EvalError on division or modulo by zero.
inline Value eval_expr(const Expr& e, Env& env) {
  if (e.is_literal()) return e.literal().value;
  if (e.is_var()) return env.get(e.var().name);
  if (e.is_unary()) {
    Value v = eval_expr(*e.unary().operand, env);
    if (e.unary().op == UnaryOp::Neg) return Value::number(-v.as_number());
    return Value::boolean(!v.as_boolean());
  }
  const auto& b = e.binary();
  if (b.op == BinaryOp::And) {
    Value l = eval_expr(*b.lhs, env);
    if (!l.as_boolean()) return Value::boolean(false);
    return Value::boolean(eval_expr(*b.rhs, env).as_boolean());
  }
  if (b.op == BinaryOp::Or) {
    Value l = eval_expr(*b.lhs, env);
    if (l.as_boolean()) return Value::boolean(true);
    return Value::boolean(eval_expr(*b.rhs, env).as_boolean());
  }
  Value l = eval_expr(*b.lhs, env);
  Value r = eval_expr(*b.rhs, env);
  // Relational operators order booleans as false < true.
  auto rank = [](const Value& v) {
    return v.is_number() ? v.as_number() : (v.as_boolean() ? 1.0 : 0.0);
  };
  switch (b.op) {
    case BinaryOp::Add: return Value::number(l.as_number() + r.as_number());
    case BinaryOp::Sub: return Value::number(l.as_number() - r.as_number());
    case BinaryOp::Mul: return Value::number(l.as_number() * r.as_number());
    case BinaryOp::Div:
      if (r.as_number() == 0.0) throw EvalError{"division by zero"};
      return Value::number(l.as_number() / r.as_number());
    case BinaryOp::Mod:
      if (r.as_number() == 0.0) throw EvalError{"modulo by zero"};
      return Value::number(std::fmod(l.as_number(), r.as_number()));
    case BinaryOp::Eq: return Value::boolean(l == r);
    case BinaryOp::Ne: return Value::boolean(l != r);
    case BinaryOp::Lt: return Value::boolean(rank(l) < rank(r));
    case BinaryOp::Le: return Value::boolean(rank(l) <= rank(r));
    case BinaryOp::Gt: return Value::boolean(rank(l) > rank(r));
    case BinaryOp::Ge: return Value::boolean(rank(l) >= rank(r));
    default: break;
  }
  assert(false && "unreachable");
  return Value::number(0.0);
}

/// Executes assignments left to right; earlier writes are visible to later
/// right-hand sides. EvalError propagates with the env partially updated.
inline void exec_stmts(std::span<const Stmt> stmts, Env& env) {
  for (const Stmt& s : stmts) {
    env.set(s.target, eval_expr(*s.rhs, env));
  }
}

}  // namespace flowmut

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cctype>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "flowmut/result.hpp"
#include "flowmut/value.hpp"

namespace flowmut {

// ---------------------------------------------------------------------------
// AST
// ---------------------------------------------------------------------------

enum class UnaryOp : std::uint8_t { Neg, Not };
enum class BinaryOp : std::uint8_t {
  Add, Sub, Mul, Div, Mod,
  Eq, Ne, Lt, Le, Gt, Ge,
  And, Or,
};

inline const char* to_string(UnaryOp op) {
  return op == UnaryOp::Neg ? "-" : "!";
}

inline const char* to_string(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Mod: return "%";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::And: return "&&";
    case BinaryOp::Or: return "||";
  }
  return "?";
}

inline bool is_arithmetic(BinaryOp op) {
  return op == BinaryOp::Add || op == BinaryOp::Sub || op == BinaryOp::Mul ||
         op == BinaryOp::Div || op == BinaryOp::Mod;
}
inline bool is_relational(BinaryOp op) {
  return op == BinaryOp::Eq || op == BinaryOp::Ne || op == BinaryOp::Lt ||
         op == BinaryOp::Le || op == BinaryOp::Gt || op == BinaryOp::Ge;
}
inline bool is_logical(BinaryOp op) {
  return op == BinaryOp::And || op == BinaryOp::Or;
}

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

/// Expression tree of the condition/action mini-language.
///
/// Negative numeric literals are canonical: the parser folds a unary minus
/// applied to a number literal into the literal itself, so `-1` parses to
/// Literal(-1) and printing Literal(-1) yields `-1` again. Construct trees
/// through parse_expr or make_neg to stay inside this canonical form.
struct Expr {
  struct Literal {
    Value value;
  };
  struct Var {
    std::string name;
  };
  struct Unary {
    UnaryOp op;
    ExprPtr operand;
  };
  struct Binary {
    BinaryOp op;
    ExprPtr lhs;
    ExprPtr rhs;
  };

  std::variant<Literal, Var, Unary, Binary> node;

  bool is_literal() const { return node.index() == 0; }
  bool is_var() const { return node.index() == 1; }
  bool is_unary() const { return node.index() == 2; }
  bool is_binary() const { return node.index() == 3; }

  Literal& literal() { return std::get<Literal>(node); }
  const Literal& literal() const { return std::get<Literal>(node); }
  Var& var() { return std::get<Var>(node); }
  const Var& var() const { return std::get<Var>(node); }
  Unary& unary() { return std::get<Unary>(node); }
  const Unary& unary() const { return std::get<Unary>(node); }
  Binary& binary() { return std::get<Binary>(node); }
  const Binary& binary() const { return std::get<Binary>(node); }
};

inline ExprPtr make_literal(Value v) {
  return std::make_unique<Expr>(Expr{Expr::Literal{v}});
}
inline ExprPtr make_number(double v) { return make_literal(Value::number(v)); }
inline ExprPtr make_bool(bool v) { return make_literal(Value::boolean(v)); }
inline ExprPtr make_var(std::string name) {
  return std::make_unique<Expr>(Expr{Expr::Var{std::move(name)}});
}
inline ExprPtr make_not(ExprPtr e) {
  return std::make_unique<Expr>(Expr{Expr::Unary{UnaryOp::Not, std::move(e)}});
}
/// Unary minus with the literal fold applied (keeps trees canonical).
inline ExprPtr make_neg(ExprPtr e) {
  if (e->is_literal() && e->literal().value.is_number()) {
    return make_number(-e->literal().value.as_number());
  }
  return std::make_unique<Expr>(Expr{Expr::Unary{UnaryOp::Neg, std::move(e)}});
}
inline ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
  return std::make_unique<Expr>(
      Expr{Expr::Binary{op, std::move(lhs), std::move(rhs)}});
}

inline ExprPtr clone(const Expr& e) {
  if (e.is_literal()) return make_literal(e.literal().value);
  if (e.is_var()) return make_var(e.var().name);
  if (e.is_unary()) {
    const auto& u = e.unary();
    return std::make_unique<Expr>(Expr{Expr::Unary{u.op, clone(*u.operand)}});
  }
  const auto& b = e.binary();
  return make_binary(b.op, clone(*b.lhs), clone(*b.rhs));
}

inline bool equal(const Expr& a, const Expr& b) {
  if (a.node.index() != b.node.index()) return false;
  if (a.is_literal()) return a.literal().value == b.literal().value;
  if (a.is_var()) return a.var().name == b.var().name;
  if (a.is_unary()) {
    return a.unary().op == b.unary().op &&
           equal(*a.unary().operand, *b.unary().operand);
  }
  return a.binary().op == b.binary().op &&
         equal(*a.binary().lhs, *b.binary().lhs) &&
         equal(*a.binary().rhs, *b.binary().rhs);
}

/// Pre-order traversal with mutable access; used by the mutation catalog to
/// collect rewrite sites.
template <class Fn>
void visit_exprs(Expr& e, Fn&& fn) {
  fn(e);
  if (e.is_unary()) {
    visit_exprs(*e.unary().operand, fn);
  } else if (e.is_binary()) {
    visit_exprs(*e.binary().lhs, fn);
    visit_exprs(*e.binary().rhs, fn);
  }
}

template <class Pred>
std::vector<Expr*> collect_exprs(Expr& root, Pred&& pred) {
  std::vector<Expr*> out;
  visit_exprs(root, [&](Expr& e) {
    if (pred(e)) out.push_back(&e);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Statements
// ---------------------------------------------------------------------------

/// One assignment `target = rhs`.
struct Stmt {
  std::string target;
  ExprPtr rhs;
};

inline Stmt clone(const Stmt& s) { return Stmt{s.target, clone(*s.rhs)}; }
inline bool equal(const Stmt& a, const Stmt& b) {
  return a.target == b.target && equal(*a.rhs, *b.rhs);
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

namespace detail {

inline int precedence(BinaryOp op) {
  switch (op) {
    case BinaryOp::Or: return 1;
    case BinaryOp::And: return 2;
    case BinaryOp::Eq:
    case BinaryOp::Ne: return 3;
    case BinaryOp::Lt:
    case BinaryOp::Le:
    case BinaryOp::Gt:
    case BinaryOp::Ge: return 4;
    case BinaryOp::Add:
    case BinaryOp::Sub: return 5;
    case BinaryOp::Mul:
    case BinaryOp::Div:
    case BinaryOp::Mod: return 6;
  }
  return 0;
}
constexpr int kUnaryPrec = 7;
constexpr int kAtomPrec = 8;

inline std::string format_number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

inline void print_rec(const Expr& e, int min_prec, std::string& out) {
  if (e.is_literal()) {
    const Value& v = e.literal().value;
    if (v.is_boolean()) {
      out += v.as_boolean() ? "true" : "false";
    } else {
      // A negative literal prints like a unary minus; guard it like one.
      bool neg = v.as_number() < 0.0;
      if (neg && min_prec > kUnaryPrec) out += '(';
      out += format_number(v.as_number());
      if (neg && min_prec > kUnaryPrec) out += ')';
    }
    return;
  }
  if (e.is_var()) {
    out += e.var().name;
    return;
  }
  if (e.is_unary()) {
    bool parens = min_prec > kUnaryPrec;
    if (parens) out += '(';
    out += to_string(e.unary().op);
    print_rec(*e.unary().operand, kUnaryPrec, out);
    if (parens) out += ')';
    return;
  }
  const auto& b = e.binary();
  int prec = precedence(b.op);
  bool parens = prec < min_prec;
  if (parens) out += '(';
  print_rec(*b.lhs, prec, out);  // left-associative: same level binds
  out += ' ';
  out += to_string(b.op);
  out += ' ';
  print_rec(*b.rhs, prec + 1, out);
  if (parens) out += ')';
}

}  // namespace detail

/// Renders an expression so that parse_expr(print_expr(e)) == e.
inline std::string print_expr(const Expr& e) {
  std::string out;
  detail::print_rec(e, 0, out);
  return out;
}

inline std::string print_stmt(const Stmt& s) {
  return s.target + " = " + print_expr(*s.rhs);
}

inline std::string print_stmts(const std::vector<Stmt>& stmts) {
  std::string out;
  for (std::size_t i = 0; i < stmts.size(); ++i) {
    if (i) out += "; ";
    out += print_stmt(stmts[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lexing and parsing
// ---------------------------------------------------------------------------

struct SyntaxError {
  std::size_t offset = 0;  // byte offset into the source text
  std::string message;
};

inline bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) {
    return false;
  }
  for (char c : s.substr(1)) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) {
      return false;
    }
  }
  return true;
}

namespace detail {

enum class Tok : std::uint8_t {
  Number, Ident, True, False,
  Plus, Minus, Star, Slash, Percent,
  EqEq, NotEq, Lt, Le, Gt, Ge,
  AndAnd, OrOr, Not,
  LParen, RParen, Assign, Semi,
  End,
};

struct Token {
  Tok kind;
  std::size_t offset;
  std::string_view text;
  double number = 0.0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Result<std::vector<Token>, SyntaxError> run() {
    std::vector<Token> out;
    std::size_t i = 0;
    const std::size_t n = src_.size();
    while (i < n) {
      char c = src_[i];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++i;
        continue;
      }
      std::size_t start = i;
      if (std::isdigit(static_cast<unsigned char>(c))) {
        while (i < n && std::isdigit(static_cast<unsigned char>(src_[i]))) ++i;
        if (i < n && src_[i] == '.') {
          if (i + 1 >= n || !std::isdigit(static_cast<unsigned char>(src_[i + 1]))) {
            return SyntaxError{i, "expected digits after decimal point"};
          }
          ++i;
          while (i < n && std::isdigit(static_cast<unsigned char>(src_[i]))) ++i;
        }
        if (i < n && (src_[i] == 'e' || src_[i] == 'E')) {
          std::size_t j = i + 1;
          if (j < n && (src_[j] == '+' || src_[j] == '-')) ++j;
          if (j >= n || !std::isdigit(static_cast<unsigned char>(src_[j]))) {
            return SyntaxError{i, "malformed exponent"};
          }
          i = j;
          while (i < n && std::isdigit(static_cast<unsigned char>(src_[i]))) ++i;
        }
        double value = 0.0;
        auto text = src_.substr(start, i - start);
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc{} || ptr != text.data() + text.size()) {
          return SyntaxError{start, "malformed number literal"};
        }
        out.push_back({Tok::Number, start, text, value});
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        while (i < n && (std::isalnum(static_cast<unsigned char>(src_[i])) ||
                         src_[i] == '_')) {
          ++i;
        }
        auto text = src_.substr(start, i - start);
        Tok kind = text == "true" ? Tok::True
                 : text == "false" ? Tok::False
                                   : Tok::Ident;
        out.push_back({kind, start, text});
        continue;
      }
      auto two = src_.substr(i, 2);
      if (two == "==") { out.push_back({Tok::EqEq, i, two}); i += 2; continue; }
      if (two == "!=") { out.push_back({Tok::NotEq, i, two}); i += 2; continue; }
      if (two == "<=") { out.push_back({Tok::Le, i, two}); i += 2; continue; }
      if (two == ">=") { out.push_back({Tok::Ge, i, two}); i += 2; continue; }
      if (two == "&&") { out.push_back({Tok::AndAnd, i, two}); i += 2; continue; }
      if (two == "||") { out.push_back({Tok::OrOr, i, two}); i += 2; continue; }
      switch (c) {
        case '+': out.push_back({Tok::Plus, i, src_.substr(i, 1)}); break;
        case '-': out.push_back({Tok::Minus, i, src_.substr(i, 1)}); break;
        case '*': out.push_back({Tok::Star, i, src_.substr(i, 1)}); break;
        case '/': out.push_back({Tok::Slash, i, src_.substr(i, 1)}); break;
        case '%': out.push_back({Tok::Percent, i, src_.substr(i, 1)}); break;
        case '<': out.push_back({Tok::Lt, i, src_.substr(i, 1)}); break;
        case '>': out.push_back({Tok::Gt, i, src_.substr(i, 1)}); break;
        case '!': out.push_back({Tok::Not, i, src_.substr(i, 1)}); break;
        case '(': out.push_back({Tok::LParen, i, src_.substr(i, 1)}); break;
        case ')': out.push_back({Tok::RParen, i, src_.substr(i, 1)}); break;
        case '=': out.push_back({Tok::Assign, i, src_.substr(i, 1)}); break;
        case ';': out.push_back({Tok::Semi, i, src_.substr(i, 1)}); break;
        case '&': return SyntaxError{i, "single '&'; logical and is '&&'"};
        case '|': return SyntaxError{i, "single '|'; logical or is '||'"};
        default:
          return SyntaxError{i, std::string("unexpected character '") + c + "'"};
      }
      ++i;
    }
    out.push_back({Tok::End, n, {}});
    return out;
  }

 private:
  std::string_view src_;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Result<ExprPtr, SyntaxError> parse_full_expr() {
    auto e = parse_or();
    if (!e) return e.error();
    if (peek().kind != Tok::End) {
      return SyntaxError{peek().offset, "unexpected trailing input"};
    }
    return std::move(e.value());
  }

  Result<std::vector<Stmt>, SyntaxError> parse_stmt_list() {
    std::vector<Stmt> out;
    if (peek().kind == Tok::End) return out;  // empty list is valid
    for (;;) {
      auto s = parse_stmt();
      if (!s) return s.error();
      out.push_back(std::move(s.value()));
      if (peek().kind == Tok::Semi) {
        advance();
        if (peek().kind == Tok::End) break;  // trailing ';'
        continue;
      }
      break;
    }
    if (peek().kind != Tok::End) {
      return SyntaxError{peek().offset, "expected ';' between statements"};
    }
    return out;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& advance() { return toks_[pos_++]; }
  bool accept(Tok k) {
    if (peek().kind == k) {
      ++pos_;
      return true;
    }
    return false;
  }

  Result<Stmt, SyntaxError> parse_stmt() {
    if (peek().kind != Tok::Ident) {
      return SyntaxError{peek().offset, "expected identifier as assignment target"};
    }
    std::string target(advance().text);
    if (!accept(Tok::Assign)) {
      return SyntaxError{peek().offset, "expected '=' in statement"};
    }
    auto rhs = parse_or();
    if (!rhs) return rhs.error();
    return Stmt{std::move(target), std::move(rhs.value())};
  }

  Result<ExprPtr, SyntaxError> parse_or() {
    auto lhs = parse_and();
    if (!lhs) return lhs;
    while (accept(Tok::OrOr)) {
      auto rhs = parse_and();
      if (!rhs) return rhs;
      lhs = make_binary(BinaryOp::Or, std::move(lhs.value()), std::move(rhs.value()));
    }
    return lhs;
  }

  Result<ExprPtr, SyntaxError> parse_and() {
    auto lhs = parse_cmpeq();
    if (!lhs) return lhs;
    while (accept(Tok::AndAnd)) {
      auto rhs = parse_cmpeq();
      if (!rhs) return rhs;
      lhs = make_binary(BinaryOp::And, std::move(lhs.value()), std::move(rhs.value()));
    }
    return lhs;
  }

  Result<ExprPtr, SyntaxError> parse_cmpeq() {
    auto lhs = parse_rel();
    if (!lhs) return lhs;
    for (;;) {
      BinaryOp op;
      if (peek().kind == Tok::EqEq) op = BinaryOp::Eq;
      else if (peek().kind == Tok::NotEq) op = BinaryOp::Ne;
      else break;
      advance();
      auto rhs = parse_rel();
      if (!rhs) return rhs;
      lhs = make_binary(op, std::move(lhs.value()), std::move(rhs.value()));
    }
    return lhs;
  }

  Result<ExprPtr, SyntaxError> parse_rel() {
    auto lhs = parse_add();
    if (!lhs) return lhs;
    for (;;) {
      BinaryOp op;
      switch (peek().kind) {
        case Tok::Lt: op = BinaryOp::Lt; break;
        case Tok::Le: op = BinaryOp::Le; break;
        case Tok::Gt: op = BinaryOp::Gt; break;
        case Tok::Ge: op = BinaryOp::Ge; break;
        default: return lhs;
      }
      advance();
      auto rhs = parse_add();
      if (!rhs) return rhs;
      lhs = make_binary(op, std::move(lhs.value()), std::move(rhs.value()));
    }
  }

  Result<ExprPtr, SyntaxError> parse_add() {
    auto lhs = parse_mul();
    if (!lhs) return lhs;
    for (;;) {
      BinaryOp op;
      if (peek().kind == Tok::Plus) op = BinaryOp::Add;
      else if (peek().kind == Tok::Minus) op = BinaryOp::Sub;
      else break;
      advance();
      auto rhs = parse_mul();
      if (!rhs) return rhs;
      lhs = make_binary(op, std::move(lhs.value()), std::move(rhs.value()));
    }
    return lhs;
  }

  Result<ExprPtr, SyntaxError> parse_mul() {
    auto lhs = parse_unary();
    if (!lhs) return lhs;
    for (;;) {
      BinaryOp op;
      if (peek().kind == Tok::Star) op = BinaryOp::Mul;
      else if (peek().kind == Tok::Slash) op = BinaryOp::Div;
      else if (peek().kind == Tok::Percent) op = BinaryOp::Mod;
      else break;
      advance();
      auto rhs = parse_unary();
      if (!rhs) return rhs;
      lhs = make_binary(op, std::move(lhs.value()), std::move(rhs.value()));
    }
    return lhs;
  }

  Result<ExprPtr, SyntaxError> parse_unary() {
    if (accept(Tok::Minus)) {
      auto operand = parse_unary();
      if (!operand) return operand;
      return make_neg(std::move(operand.value()));
    }
    if (accept(Tok::Not)) {
      auto operand = parse_unary();
      if (!operand) return operand;
      return make_not(std::move(operand.value()));
    }
    return parse_atom();
  }

  Result<ExprPtr, SyntaxError> parse_atom() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Number:
        advance();
        return make_number(t.number);
      case Tok::True:
        advance();
        return make_bool(true);
      case Tok::False:
        advance();
        return make_bool(false);
      case Tok::Ident:
        advance();
        return make_var(std::string(t.text));
      case Tok::LParen: {
        advance();
        auto inner = parse_or();
        if (!inner) return inner;
        if (!accept(Tok::RParen)) {
          return SyntaxError{peek().offset, "expected ')'"};
        }
        return inner;
      }
      default:
        return SyntaxError{t.offset, "expected expression"};
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Total: returns an Expr or a SyntaxError for any byte string.
inline Result<ExprPtr, SyntaxError> parse_expr(std::string_view src) {
  auto toks = detail::Lexer(src).run();
  if (!toks) return toks.error();
  return detail::Parser(std::move(toks.value())).parse_full_expr();
}

/// Parses `stmt (";" stmt)* [";"]`. The empty string parses to an empty list.
inline Result<std::vector<Stmt>, SyntaxError> parse_stmts(std::string_view src) {
  auto toks = detail::Lexer(src).run();
  if (!toks) return toks.error();
  return detail::Parser(std::move(toks.value())).parse_stmt_list();
}

// ---------------------------------------------------------------------------
// Type checking
// ---------------------------------------------------------------------------

enum class VarKind : std::uint8_t { Input, Output, Local };

inline const char* to_string(VarKind k) {
  switch (k) {
    case VarKind::Input: return "input";
    case VarKind::Output: return "output";
    case VarKind::Local: return "local";
  }
  return "?";
}

struct SymbolInfo {
  ValueType type;
  VarKind kind;
};
using SymbolTable = std::map<std::string, SymbolInfo>;

struct TypeIssue {
  enum class Kind : std::uint8_t { UndefinedVariable, Mismatch };
  Kind kind;
  std::string message;
};

/// Infers the type of a well-formed expression against a variable table.
inline Result<ValueType, TypeIssue> type_of(const Expr& e, const SymbolTable& table) {
  using K = TypeIssue::Kind;
  if (e.is_literal()) return e.literal().value.type();
  if (e.is_var()) {
    auto it = table.find(e.var().name);
    if (it == table.end()) {
      return TypeIssue{K::UndefinedVariable,
                       "undefined variable '" + e.var().name + "'"};
    }
    return it->second.type;
  }
  if (e.is_unary()) {
    auto t = type_of(*e.unary().operand, table);
    if (!t) return t;
    if (e.unary().op == UnaryOp::Neg) {
      if (t.value() != ValueType::Number) {
        return TypeIssue{K::Mismatch, "unary '-' requires a number"};
      }
      return ValueType::Number;
    }
    if (t.value() != ValueType::Boolean) {
      return TypeIssue{K::Mismatch, "unary '!' requires a boolean"};
    }
    return ValueType::Boolean;
  }
  const auto& b = e.binary();
  auto lt = type_of(*b.lhs, table);
  if (!lt) return lt;
  auto rt = type_of(*b.rhs, table);
  if (!rt) return rt;
  if (is_arithmetic(b.op)) {
    if (lt.value() != ValueType::Number || rt.value() != ValueType::Number) {
      return TypeIssue{K::Mismatch,
                       std::string("'") + to_string(b.op) + "' requires numbers"};
    }
    return ValueType::Number;
  }
  if (is_relational(b.op)) {
    if (lt.value() != rt.value()) {
      return TypeIssue{K::Mismatch, std::string("'") + to_string(b.op) +
                                        "' requires operands of the same type"};
    }
    return ValueType::Boolean;
  }
  // logical
  if (lt.value() != ValueType::Boolean || rt.value() != ValueType::Boolean) {
    return TypeIssue{K::Mismatch,
                     std::string("'") + to_string(b.op) + "' requires booleans"};
  }
  return ValueType::Boolean;
}

/// Checks an assignment: target declared, target writable (not an input),
/// rhs type equal to the target type.
inline Result<std::monostate, TypeIssue> check_stmt(const Stmt& s,
                                                    const SymbolTable& table) {
  using K = TypeIssue::Kind;
  auto it = table.find(s.target);
  if (it == table.end()) {
    return TypeIssue{K::UndefinedVariable,
                     "undefined variable '" + s.target + "'"};
  }
  if (it->second.kind == VarKind::Input) {
    return TypeIssue{K::Mismatch,
                     "assignment to input variable '" + s.target + "'"};
  }
  auto rt = type_of(*s.rhs, table);
  if (!rt) return rt.error();
  if (rt.value() != it->second.type) {
    return TypeIssue{K::Mismatch, "assigning " +
                                      std::string(to_string(rt.value())) +
                                      " to " + to_string(it->second.type) +
                                      " variable '" + s.target + "'"};
  }
  return std::monostate{};
}

}  // namespace flowmut

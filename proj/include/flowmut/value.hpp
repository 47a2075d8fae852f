// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <string>

namespace flowmut {

enum class ValueType : std::uint8_t { Number, Boolean };

inline const char* to_string(ValueType t) {
  return t == ValueType::Number ? "number" : "boolean";
}

/// Runtime value of the chart mini-language: a 64-bit float or a boolean.
/// The two types are disjoint; there is no implicit 0/1 coercion.
class Value {
 public:
  Value() : type_(ValueType::Number), num_(0.0), bool_(false) {}

  static Value number(double v) {
    Value x;
    x.type_ = ValueType::Number;
    x.num_ = v;
    return x;
  }
  static Value boolean(bool v) {
    Value x;
    x.type_ = ValueType::Boolean;
    x.bool_ = v;
    return x;
  }

  ValueType type() const { return type_; }
  bool is_number() const { return type_ == ValueType::Number; }
  bool is_boolean() const { return type_ == ValueType::Boolean; }

  double as_number() const { return num_; }
  bool as_boolean() const { return bool_; }

  friend bool operator==(const Value& a, const Value& b) {
    if (a.type_ != b.type_) return false;
    if (a.type_ == ValueType::Boolean) return a.bool_ == b.bool_;
    // Bitwise equality keeps -0.0 vs 0.0 and NaN distinctions out of
    // structural comparisons; simulation traces compare with a tolerance
    // instead.
    return a.num_ == b.num_ || (std::isnan(a.num_) && std::isnan(b.num_));
  }
  friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }

 private:
  ValueType type_;
  double num_;
  bool bool_;
};

}  // namespace flowmut

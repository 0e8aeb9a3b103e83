#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <variant>

namespace sfi {

/// Exact rational number, always stored reduced with a positive denominator.
class Rational {
 public:
  Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  friend bool operator==(const Rational&, const Rational&) = default;
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);

  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string str() const;

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

/// Thrown when exact arithmetic leaves the int64 range.
class ArithmeticOverflow : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

struct Symbol {
  std::string name;
  friend auto operator<=>(const Symbol&, const Symbol&) = default;
};

/// An atom of the finite value set. Ordered first by kind, then by value.
class Value {
 public:
  enum class Kind { Bool = 0, Int = 1, Rational = 2, Symbol = 3 };

  Value() : v_(false) {}
  static Value boolean(bool b) { return Value(Storage(b)); }
  static Value integer(std::int64_t i) { return Value(Storage(i)); }
  static Value rational(Rational r) { return Value(Storage(r)); }
  static Value symbol(std::string s) { return Value(Storage(Symbol{std::move(s)})); }

  Kind kind() const { return static_cast<Kind>(v_.index()); }
  bool is_bool() const { return kind() == Kind::Bool; }
  bool is_int() const { return kind() == Kind::Int; }
  bool is_rational() const { return kind() == Kind::Rational; }
  bool is_symbol() const { return kind() == Kind::Symbol; }
  bool is_numeric() const { return is_int() || is_rational(); }

  bool as_bool() const { return std::get<bool>(v_); }
  std::int64_t as_int() const { return std::get<std::int64_t>(v_); }
  const Rational& as_rational() const { return std::get<Rational>(v_); }
  const std::string& as_symbol() const { return std::get<Symbol>(v_).name; }

  /// Numeric view; ints are promoted.
  Rational to_rational() const;

  friend bool operator==(const Value&, const Value&) = default;
  friend std::strong_ordering operator<=>(const Value& a, const Value& b);

  /// Literal form accepted by the parser: true, 42, -7, 3/2, `sym`.
  std::string literal() const;
  /// Short label used in path-qualified variable names (T/F for booleans).
  std::string label() const;

  std::size_t hash() const;

 private:
  using Storage = std::variant<bool, std::int64_t, Rational, Symbol>;
  explicit Value(Storage s) : v_(std::move(s)) {}
  Storage v_;
};

std::string kind_name(Value::Kind k);

}  // namespace sfi

template <>
struct std::hash<sfi::Value> {
  std::size_t operator()(const sfi::Value& v) const noexcept { return v.hash(); }
};

#include "sfi/value.h"

#include <numeric>

namespace sfi {

namespace {

std::int64_t narrow(__int128 x) {
  if (x > INT64_MAX || x < INT64_MIN) throw ArithmeticOverflow("rational arithmetic overflow");
  return static_cast<std::int64_t>(x);
}

Rational make(__int128 num, __int128 den) {
  if (den == 0) throw std::domain_error("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  __int128 a = num < 0 ? -num : num;
  __int128 b = den;
  while (b != 0) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  return Rational(narrow(num), narrow(den));
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::domain_error("rational with zero denominator");
  if (den < 0) {
    if (num == INT64_MIN || den == INT64_MIN) throw ArithmeticOverflow("rational arithmetic overflow");
    num = -num;
    den = -den;
  }
  std::int64_t g = std::gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  num_ = num;
  den_ = den;
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
  __int128 l = static_cast<__int128>(a.num_) * b.den_;
  __int128 r = static_cast<__int128>(b.num_) * a.den_;
  if (l < r) return std::strong_ordering::less;
  if (l > r) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

Rational operator+(const Rational& a, const Rational& b) {
  return make(static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_,
              static_cast<__int128>(a.den_) * b.den_);
}

Rational operator-(const Rational& a, const Rational& b) {
  return make(static_cast<__int128>(a.num_) * b.den_ - static_cast<__int128>(b.num_) * a.den_,
              static_cast<__int128>(a.den_) * b.den_);
}

Rational operator*(const Rational& a, const Rational& b) {
  return make(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
}

std::string Rational::str() const { return std::to_string(num_) + "/" + std::to_string(den_); }

Rational Value::to_rational() const {
  if (is_int()) return Rational(as_int());
  if (is_rational()) return as_rational();
  throw std::logic_error("value is not numeric");
}

std::strong_ordering operator<=>(const Value& a, const Value& b) {
  if (a.v_.index() != b.v_.index()) return a.v_.index() <=> b.v_.index();
  switch (a.kind()) {
    case Value::Kind::Bool:
      return a.as_bool() <=> b.as_bool();
    case Value::Kind::Int:
      return a.as_int() <=> b.as_int();
    case Value::Kind::Rational:
      return a.as_rational() <=> b.as_rational();
    case Value::Kind::Symbol:
      return a.as_symbol() <=> b.as_symbol();
  }
  return std::strong_ordering::equal;
}

std::string Value::literal() const {
  switch (kind()) {
    case Kind::Bool:
      return as_bool() ? "true" : "false";
    case Kind::Int:
      return std::to_string(as_int());
    case Kind::Rational:
      return as_rational().str();
    case Kind::Symbol:
      return "`" + as_symbol() + "`";
  }
  return {};
}

std::string Value::label() const {
  switch (kind()) {
    case Kind::Bool:
      return as_bool() ? "T" : "F";
    case Kind::Symbol:
      return as_symbol();
    default:
      return literal();
  }
}

std::size_t Value::hash() const {
  std::size_t h = std::hash<std::size_t>{}(v_.index());
  std::size_t x = 0;
  switch (kind()) {
    case Kind::Bool:
      x = std::hash<bool>{}(as_bool());
      break;
    case Kind::Int:
      x = std::hash<std::int64_t>{}(as_int());
      break;
    case Kind::Rational:
      x = std::hash<std::int64_t>{}(as_rational().num()) * 31 + std::hash<std::int64_t>{}(as_rational().den());
      break;
    case Kind::Symbol:
      x = std::hash<std::string>{}(as_symbol());
      break;
  }
  return h * 1000003u ^ x;
}

std::string kind_name(Value::Kind k) {
  switch (k) {
    case Value::Kind::Bool:
      return "bool";
    case Value::Kind::Int:
      return "int";
    case Value::Kind::Rational:
      return "rational";
    case Value::Kind::Symbol:
      return "symbol";
  }
  return "?";
}

}  // namespace sfi

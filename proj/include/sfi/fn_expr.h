#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sfi/value.h"

namespace sfi {

/// Raised when a pure function is applied to atoms of the wrong kind.
class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FnOp { Or, And, Eq, Ne, Lt, Le, Add, Sub, Mul, Min, Max };

/// Expression tree of the pure-function language used by Apply.
/// Variables are resolved to parameter indices at construction.
class FnExpr {
 public:
  enum class Kind { Literal, Param, Not, Binary, If };

  static std::shared_ptr<const FnExpr> literal(Value v);
  static std::shared_ptr<const FnExpr> param(std::size_t index);
  static std::shared_ptr<const FnExpr> negation(std::shared_ptr<const FnExpr> e);
  static std::shared_ptr<const FnExpr> binary(FnOp op, std::shared_ptr<const FnExpr> l,
                                              std::shared_ptr<const FnExpr> r);
  static std::shared_ptr<const FnExpr> if_then_else(std::shared_ptr<const FnExpr> c,
                                                    std::shared_ptr<const FnExpr> t,
                                                    std::shared_ptr<const FnExpr> e);

  Kind kind() const { return kind_; }
  FnOp op() const { return op_; }
  const Value& value() const { return value_; }
  std::size_t index() const { return index_; }
  const std::vector<std::shared_ptr<const FnExpr>>& children() const { return children_; }

  Value eval(std::span<const Value> args) const;

  /// Largest parameter index referenced plus one.
  std::size_t arity_needed() const;

  friend bool operator==(const FnExpr& a, const FnExpr& b);

 private:
  Kind kind_ = Kind::Literal;
  FnOp op_ = FnOp::Or;
  Value value_;
  std::size_t index_ = 0;
  std::vector<std::shared_ptr<const FnExpr>> children_;
};

/// `(p1, ..., pn) => body`
struct Lambda {
  std::vector<std::string> params;
  std::shared_ptr<const FnExpr> body;

  Value operator()(std::span<const Value> args) const;
  friend bool operator==(const Lambda& a, const Lambda& b);
};

/// Applies f to args; throws EvalError on arity or kind mismatch.
Value eval_fn(const Lambda& f, std::span<const Value> args);

/// Canonical text of a lambda, e.g. `(b1, b2) => b1 && b2`.
std::string print_lambda(const Lambda& f);

}  // namespace sfi

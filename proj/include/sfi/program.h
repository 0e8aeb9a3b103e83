#pragma once

#include <functional>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sfi/fn_expr.h"
#include "sfi/value.h"

namespace sfi {

/// Structural problems in a program or expanded model.
class ModelError : public std::runtime_error {
 public:
  enum class Kind {
    UnknownVariable,
    DuplicateName,
    MissingOutcome,
    EmptyProgram,
    InvalidDistribution,
    RecursionDetected,
    MissingBranch,
    NonFiniteSupport,
    ValueNotInSupport,
    EvalFailure,
  };
  ModelError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct Flip {
  double p = 0.5;
  friend bool operator==(const Flip&, const Flip&) = default;
};

struct Categorical {
  std::vector<std::pair<Value, double>> entries;
  friend bool operator==(const Categorical&, const Categorical&) = default;
};

/// `bins` equal-width bins over [lo, hi], each represented by its midpoint.
struct UniformDiscretized {
  Rational lo;
  Rational hi;
  int bins = 5;
  friend bool operator==(const UniformDiscretized&, const UniformDiscretized&) = default;
};

using PrimitiveDist = std::variant<Flip, Categorical, UniformDiscretized>;

/// Finite support with probabilities, sorted by value; zero-probability atoms kept.
std::vector<std::pair<Value, double>> distribution_of(const PrimitiveDist& d);

/// Throws ModelError(InvalidDistribution) unless parameters are valid.
void validate_distribution(const PrimitiveDist& d);

class Program;

struct ValueExpr {
  Value value;
};

struct PrimitiveExpr {
  PrimitiveDist dist;
};

struct ApplyExpr {
  std::vector<std::string> args;
  Lambda fn;
};

/// Chain(parent, f). `branches` is sorted by parent value. `generator`, when
/// set, supplies branches missing from the table and is memoized at expand time.
struct ChainExpr {
  using Generator = std::function<Program(const Value&)>;

  std::string parent;
  std::vector<std::pair<Value, std::shared_ptr<const Program>>> branches;
  std::shared_ptr<const Generator> generator;

  const Program* find_branch(const Value& v) const;
};

using Expression = std::variant<ValueExpr, PrimitiveExpr, ApplyExpr, ChainExpr>;

struct Definition {
  std::string name;
  Expression expr;
};

/// An ordered list of definitions over a set of free variables.
class Program {
 public:
  Program() = default;
  Program(std::set<std::string> free, std::vector<Definition> defs);

  const std::set<std::string>& free() const { return free_; }
  const std::vector<Definition>& defs() const { return defs_; }

  /// Validates names, availability and branch shape; throws ModelError.
  void validate() const;

  const Definition* find(const std::string& name) const;

 private:
  std::set<std::string> free_;
  std::vector<Definition> defs_;
};

/// Structural equality of programs (lambdas compared as trees).
bool operator==(const Program& a, const Program& b);
bool operator==(const Expression& a, const Expression& b);

/// F_Q together with every name defined strictly before `name`.
std::set<std::string> available_set(const Program& program, const std::string& name);

/// Names referenced directly by an expression (Apply args or Chain parent).
std::vector<std::string> referenced_names(const Expression& e);

// Embedded construction helpers.
Expression value(Value v);
Expression flip(double p);
Expression categorical(std::vector<std::pair<Value, double>> entries);
Expression uniform(Rational lo, Rational hi, int bins = 5);
Expression apply(std::vector<std::string> args, Lambda fn);
Expression chain(std::string parent, std::vector<std::pair<Value, Program>> branches);
Expression chain(std::string parent, ChainExpr::Generator generator);

}  // namespace sfi

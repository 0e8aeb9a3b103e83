#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "sfi/expanded_model.h"

namespace sfi {

class InferenceError : public std::runtime_error {
 public:
  enum class Kind {
    SupportMismatch,
    UnknownVariable,
    ZeroMass,
    ValueNotInSupport,
    ScopeViolation,
    MemoryBudgetExceeded,
    InitializationFailure,
  };
  InferenceError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Dense table over variables sorted by id; the last variable varies
/// fastest. The represented values are table[i] * exp(log_scale).
class Factor {
 public:
  /// The scalar factor 1.
  Factor();
  /// `vars` may be in any order; the table is laid out for that order and is
  /// permuted into canonical order.
  Factor(std::vector<VarId> vars, std::vector<std::size_t> cards, std::vector<double> table);

  static Factor constant(std::vector<VarId> vars, std::vector<std::size_t> cards, double value);

  const std::vector<VarId>& vars() const { return vars_; }
  const std::vector<std::size_t>& cards() const { return cards_; }
  const std::vector<double>& table() const { return table_; }
  std::size_t size() const { return table_.size(); }
  double log_scale() const { return log_scale_; }

  bool has(VarId v) const;
  std::size_t position(VarId v) const;  // throws UnknownVariable
  std::size_t card(VarId v) const { return cards_[position(v)]; }

  /// Table entry for a full assignment given in vars() order.
  double at(const std::vector<std::size_t>& assignment) const;
  /// Entry including the scale.
  double value(std::size_t index) const;

  /// Divides by the largest entry and folds it into log_scale.
  Factor rescaled() const;

  /// `vars: a(2) b(3)` then `index | assignment | value` rows.
  std::string dump(const ExpandedModel* model = nullptr) const;

  friend bool operator==(const Factor&, const Factor&) = default;

 private:
  friend Factor product(const Factor& f, const Factor& g);
  friend Factor sum_out(const Factor& f, VarId x);
  friend Factor normalize(const Factor& f);
  std::vector<VarId> vars_;
  std::vector<std::size_t> cards_;
  std::vector<double> table_;
  double log_scale_ = 0.0;
};

using FactorSet = std::vector<Factor>;

/// Pointwise product over the union of variables. Throws SupportMismatch.
Factor product(const Factor& f, const Factor& g);
Factor product(const FactorSet& fs);

/// Sums x out. Throws UnknownVariable.
Factor sum_out(const Factor& f, VarId x);

/// Sums out every variable not in keep.
Factor marginalize_to(const Factor& f, const VarSet& keep);

/// Entries divided by their total; log_scale reset. Throws ZeroMass.
Factor normalize(const Factor& f);

/// Largest absolute difference between two factors with the same scope,
/// both normalized first.
double max_abs_diff(const Factor& a, const Factor& b);

/// Union of the factors' variables.
VarSet scope_of(const FactorSet& fs);

/// Cardinality of every variable in fs. Throws SupportMismatch on disagreement.
std::map<VarId, std::size_t> cards_of(const FactorSet& fs);

/// Appends one indicator factor per evidence entry. Throws ValueNotInSupport.
FactorSet condition(const ExpandedModel& model, FactorSet fs, const std::map<VarId, Value>& evidence);

/// Indicator over {x} selecting support position `index`.
Factor indicator(VarId x, std::size_t card, std::size_t index);

}  // namespace sfi

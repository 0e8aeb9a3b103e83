#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "sfi/program.h"
#include "sfi/value.h"

namespace sfi {

/// Index of a variable in an ExpandedModel. Ids follow expansion order, which
/// is topological: every variable's references have smaller ids.
struct VarId {
  std::uint32_t index = 0;
  friend auto operator<=>(const VarId&, const VarId&) = default;
};

using VarSet = std::set<VarId>;

struct ScopeId {
  std::uint32_t index = 0;
  friend auto operator<=>(const ScopeId&, const ScopeId&) = default;
};

inline constexpr ScopeId kRootScope{0};

struct ExpandedValue {
  Value value;
};
struct ExpandedPrimitive {
  PrimitiveDist dist;
};
struct ExpandedApply {
  std::vector<VarId> args;
  Lambda fn;
};
/// One instantiated branch per parent support value, in support order.
struct ExpandedChain {
  VarId parent;
  std::vector<std::pair<Value, ScopeId>> branches;
};

using ExpandedDef = std::variant<ExpandedValue, ExpandedPrimitive, ExpandedApply, ExpandedChain>;

struct VariableInfo {
  std::string name;  // path-qualified, e.g. b.T.x1
  ScopeId scope;     // scope that defines it
  ExpandedDef def;
  std::vector<Value> support;  // sorted, distinct
};

/// A program instance: the root program or one branch of a chain for one
/// parent value. Variables of the scope and all nested scopes occupy the
/// contiguous id range [first, last).
struct ScopeInfo {
  std::optional<ScopeId> parent;
  std::optional<VarId> chain_var;  // for branch scopes
  Value parent_value;
  std::vector<VarId> own_vars;       // defined directly in this scope
  std::vector<ScopeId> children;     // branch scopes, definition then value order
  std::optional<VarId> outcome;      // branch scopes only
  VarSet externals;                  // variables outside the range referenced inside it
  VarId first{};
  VarId last{};

  bool contains(VarId v) const { return first <= v && v < last; }
};

struct ChainInstance {
  VarId chain;
  VarId parent;
  std::vector<std::pair<Value, VarId>> outcomes;
};

struct ExpandOptions {
  /// Upper bound on the number of argument combinations enumerated when
  /// computing the support of an Apply; exceeding it is NonFiniteSupport.
  std::size_t max_support_product = 1u << 22;
  std::size_t max_depth = 64;
};

/// Fully chain-expanded variable graph with supports and evidence.
class ExpandedModel {
 public:
  std::size_t size() const { return vars_.size(); }
  const VariableInfo& var(VarId id) const { return vars_.at(id.index); }
  const std::string& name(VarId id) const { return vars_.at(id.index).name; }
  const std::vector<Value>& support(VarId id) const { return vars_.at(id.index).support; }
  std::size_t card(VarId id) const { return vars_.at(id.index).support.size(); }

  /// Position of `v` in the support of `id`, or nullopt.
  std::optional<std::size_t> value_index(VarId id, const Value& v) const;

  std::optional<VarId> find(const std::string& name) const;
  VarId at(const std::string& name) const;

  const std::vector<ScopeInfo>& scopes() const { return scopes_; }
  const ScopeInfo& scope(ScopeId id) const { return scopes_.at(id.index); }
  const std::vector<ChainInstance>& chain_instances() const { return chains_; }
  const std::map<VarId, Value>& evidence() const { return evidence_; }

  /// Variables of the whole model, in id order.
  std::vector<VarId> all_vars() const;

  /// Returns a copy carrying the given evidence (replacing any previous one).
  /// Throws ModelError(ValueNotInSupport / UnknownVariable).
  ExpandedModel with_evidence(const std::map<std::string, Value>& evidence) const;
  ExpandedModel with_evidence(const std::map<VarId, Value>& evidence) const;

  /// Variables referenced directly by the definition of v (Apply args; Chain
  /// parent and outcome of every branch).
  std::vector<VarId> references(VarId v) const;

 private:
  friend class Expander;
  std::vector<VariableInfo> vars_;
  std::vector<ScopeInfo> scopes_;
  std::vector<ChainInstance> chains_;
  std::map<VarId, Value> evidence_;
  std::unordered_map<std::string, VarId> by_name_;
};

/// Instantiates every chain branch per parent support value.
/// Throws ModelError (RecursionDetected, MissingBranch, NonFiniteSupport,
/// UnknownVariable, EvalFailure, ...).
ExpandedModel expand(const Program& program, const ExpandOptions& options = {});

/// U_r: r plus everything its definition uses, transitively. A chain uses its
/// parent and every variable of every instantiated branch.
VarSet uses_set(const ExpandedModel& model, VarId r);

/// E^r: members of U_r (other than r) that some variable outside U_r reaches
/// through direct references without passing through r.
VarSet external_set(const ExpandedModel& model, VarId r);

}  // namespace sfi

template <>
struct std::hash<sfi::VarId> {
  std::size_t operator()(const sfi::VarId& v) const noexcept { return std::hash<std::uint32_t>{}(v.index); }
};

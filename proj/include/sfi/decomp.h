#pragma once

#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "sfi/expanded_model.h"
#include "sfi/factor.h"
#include "sfi/solvers.h"

namespace sfi {

/// A chain branch instance: the outcome of one branch for one parent value.
struct DecompositionPoint {
  VarId outcome_var;
  VarId chain_var;
  Value parent_value;
  ScopeId scope;
  VarId first;  // the branch's variables occupy [first, last)
  VarId last;
  VarSet externals;
};

/// Every chain branch of the model, depth first in definition order then
/// parent-value order; a branch's nested points follow it directly.
std::vector<DecompositionPoint> find_points(const ExpandedModel& model);

class Decomposer;

class DecompositionStrategy {
 public:
  virtual ~DecompositionStrategy() = default;
  /// Factors covering at least `relevant` that stand in for branch `scope`.
  virtual FactorSet solve(Decomposer& d, ScopeId scope, const VarSet& relevant,
                          const InferenceStrategy& is) const = 0;
  virtual std::string name() const = 0;
};

/// Returns the branch's factors untouched.
std::shared_ptr<const DecompositionStrategy> strategy_flat();
/// Solves every branch with decompose().
std::shared_ptr<const DecompositionStrategy> strategy_recursive();
/// Recurses only when |relevant| <= n; raises otherwise.
std::shared_ptr<const DecompositionStrategy> strategy_bounded(std::size_t n);
/// `flat`, `recursive` or `bounded:<n>`. Throws std::invalid_argument.
std::shared_ptr<const DecompositionStrategy> parse_decomposition(const std::string& name);

struct DecompStats {
  std::size_t points_visited = 0;
  std::size_t is_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t lemma_checks = 0;
  std::size_t lemma_violations = 0;
};

struct DecompOptions {
  bool cache = true;
  bool check_lemma = true;
};

/// Runs the decomposition over one expanded model. Not thread-safe; create
/// one per run.
class Decomposer {
 public:
  /// `extra` potentials are attached to the root scope.
  Decomposer(const ExpandedModel& model, FactorSet extra = {}, DecompOptions options = {});

  const ExpandedModel& model() const { return model_; }

  /// Factors of scope q's own variables (evidence included; the root also
  /// gets the extra potentials).
  FactorSet own_factors(ScopeId q) const;
  /// Factors of every variable in q's range.
  FactorSet subtree_factors(ScopeId q) const;

  /// Own factors plus, for each branch of each chain in q, what `ds` returns
  /// for relevant = branch externals + outcome + any of `targets` inside it.
  FactorSet collect(ScopeId q, const VarSet& targets, const DecompositionStrategy& ds, const InferenceStrategy& is);

  /// IS(collect(q, E), E). Throws ScopeViolation if IS returns another scope.
  Factor decompose(ScopeId q, const VarSet& E, const DecompositionStrategy& ds, const InferenceStrategy& is);

  /// Calls is.solve and checks its scope.
  Factor run_is(const InferenceStrategy& is, const FactorSet& fs, const VarSet& keep);

  /// Cached branch solve: recursive decomposition of a branch with no
  /// externals reuses results of structurally identical branches.
  Factor solve_branch(ScopeId branch, const VarSet& relevant, const DecompositionStrategy& ds,
                      const InferenceStrategy& is);

  /// True when the factors split at the branch share only externals and the
  /// outcome; counts violations.
  bool check_lemma(ScopeId branch);

  const DecompStats& stats() const { return stats_; }
  SolveLog& log() { return log_; }

 private:
  std::string branch_key(ScopeId branch) const;

  const ExpandedModel& model_;
  std::vector<FactorSet> by_var_;
  FactorSet extra_;
  DecompOptions options_;
  DecompStats stats_;
  SolveLog log_;
  std::unordered_map<std::string, Factor> cache_;
};

struct QueryResult {
  std::map<VarId, Factor> marginals;  // normalized
  DecompStats stats;
  std::vector<AlgorithmChoice> log;
};

/// Normalized marginals of each query variable. Branch results are computed
/// once and the top-level inference runs once per query.
/// Throws ZeroMass on contradictory evidence.
QueryResult sfi_marginals(const ExpandedModel& model, const std::vector<VarId>& queries,
                          const DecompositionStrategy& ds, const InferenceStrategy& is, const FactorSet& extra = {},
                          const DecompOptions& options = {});

/// Normalized marginal of q.
Factor sfi_query(const ExpandedModel& model, VarId q, const DecompositionStrategy& ds, const InferenceStrategy& is,
                 const FactorSet& extra = {}, const DecompOptions& options = {});

}  // namespace sfi

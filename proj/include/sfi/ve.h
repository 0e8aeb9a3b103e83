#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "sfi/factor.h"

namespace sfi {

struct EliminationStep {
  VarId var;
  double product_cells = 0;   // size of the product of the consumed factors
  double new_cells = 0;       // size after summing var out
  double consumed_cells = 0;  // total size of the consumed factors
  double cost() const { return new_cells - consumed_cells; }
};

struct EliminationOrder {
  std::vector<VarId> order;
  std::vector<EliminationStep> steps;
  double max_cost = 0;         // 0 when nothing is eliminated
  double max_product_cells = 0;
};

/// Greedy min-fill order over scope(fs) minus keep; ties go to the smaller id.
EliminationOrder elimination_order(const FactorSet& fs, const VarSet& keep);

/// Costs of eliminating in the given order.
EliminationOrder evaluate_order(const FactorSet& fs, const std::vector<VarId>& order);

/// Maximum per-step cost of the min-fill order.
double ve_cost(const FactorSet& fs, const VarSet& keep);

struct VeOptions {
  /// Largest intermediate table allowed; bigger throws MemoryBudgetExceeded.
  std::size_t max_cells = std::size_t{1} << 25;
  /// Explicit order; must contain exactly scope(fs) minus keep.
  std::optional<std::vector<VarId>> order;
};

/// Unnormalized joint over exactly keep. Variables in keep that no factor
/// mentions are an error (UnknownVariable).
Factor variable_elimination(const FactorSet& fs, const VarSet& keep, const VeOptions& options = {});

}  // namespace sfi

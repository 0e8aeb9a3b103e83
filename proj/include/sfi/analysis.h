#pragma once

#include <vector>

#include "sfi/factor.h"

namespace sfi {

/// Structural clean-up used by the approximate solvers before they build a
/// graph. Does not change the joint over `keep` up to a constant.
///  1. A variable outside keep whose factors are all unary except at most one
///     is summed into that factor (one pass, in id order).
///  2. A factor whose scope is contained in another factor's scope is
///     multiplied into it.
FactorSet simplify(const FactorSet& fs, const VarSet& keep);

/// True when some configuration of f's other variables leaves exactly one
/// non-zero value of x (x must have at least two values).
bool has_degenerate_column(const Factor& f, VarId x);

/// Groups of variables that must be sampled jointly: every factor with a
/// degenerate column joins all of its variables; overlapping groups merge.
/// Returns every variable of fs exactly once, groups sorted by smallest id.
std::vector<std::vector<VarId>> blocks(const FactorSet& fs);

/// Share of variables that sit in a block with at least one other variable.
/// 0 for an empty set.
double determinism_fraction(const FactorSet& fs);

}  // namespace sfi

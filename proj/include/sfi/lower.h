#pragma once

#include <vector>

#include "sfi/expanded_model.h"
#include "sfi/factor.h"

namespace sfi {

/// Factors created for each variable, indexed by VarId. Evidence indicators
/// are filed under the observed variable.
///  - value: point mass over {r}
///  - primitive: distribution over the support of r
///  - apply: indicator over {r, args} that is 1 where r = f(args)
///  - chain: per parent value v a factor over {r, parent, outcome_v} that is
///    1 when parent != v or r == outcome_v, plus a constant-1 selector over
///    {r, parent}
std::vector<FactorSet> lower_by_variable(const ExpandedModel& model);

/// All factors of the model (including evidence) in variable order.
FactorSet lower(const ExpandedModel& model);

/// Factors created for variable v alone, without evidence.
FactorSet lower_variable(const ExpandedModel& model, VarId v);

}  // namespace sfi

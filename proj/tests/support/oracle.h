#pragma once

#include <map>
#include <vector>

#include "sfi/expanded_model.h"

namespace oracle {

/// Unnormalized joint over `vars` (values in the given order) by walking
/// every assignment of the model's stochastic variables and evaluating the
/// deterministic ones. Evidence of the model is respected. Uses no factor code.
std::map<std::vector<sfi::Value>, double> joint(const sfi::ExpandedModel& model, const std::vector<sfi::VarId>& vars);

/// Normalized marginal of q in support order. Throws std::runtime_error when
/// the evidence has probability zero.
std::vector<double> marginal(const sfi::ExpandedModel& model, sfi::VarId q);

/// Probability of the model's evidence.
double evidence_probability(const sfi::ExpandedModel& model);

/// P(child | parent) as table[parent index][child index] in support order;
/// rows for parent values with zero probability are left at zero.
std::vector<std::vector<double>> conditional(const sfi::ExpandedModel& model, sfi::VarId parent, sfi::VarId child);

}  // namespace oracle

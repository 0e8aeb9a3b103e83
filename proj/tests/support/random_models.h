#pragma once

#include <map>
#include <random>

#include "sfi/expanded_model.h"
#include "sfi/program.h"

namespace gen {

struct RandomModelOptions {
  std::size_t max_vars = 12;   // expanded variables
  std::size_t max_chains = 3;  // chain definitions, nested ones included
  /// Every variable is referenced at most once and branches only use their
  /// own variables, so each solved sub-model is a tree.
  bool tree = false;
  bool nested = true;
};

/// Random boolean program within the budget.
sfi::Program random_program(std::mt19937_64& rng, const RandomModelOptions& options = {});

/// `p = flip(..)` followed by one chain on p whose branches may use p.
sfi::Program random_single_chain(std::mt19937_64& rng, std::size_t max_branch_vars = 4);

/// Up to `max_count` observations with positive probability (checked by the
/// enumeration oracle).
std::map<sfi::VarId, sfi::Value> random_evidence(const sfi::ExpandedModel& model, std::mt19937_64& rng,
                                                 std::size_t max_count);

}  // namespace gen

#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "sfi/expanded_model.h"
#include "sfi/factor.h"
#include "sfi/program.h"

namespace sfi {

/// Pairwise potential between two named top-level variables, row-major with
/// the second variable fastest.
struct NamedPotential {
  std::string a, b;
  std::vector<double> table;
};

/// A generated benchmark model before expansion.
struct GeneratedModel {
  std::string id;
  Program program;
  std::vector<NamedPotential> potentials;
  std::map<std::string, Value> evidence;
  std::vector<std::string> queries;
};

/// Three-layer noisy-or network: causal flips, intermediate diseases and
/// symptoms. Intermediates and symptoms are chains on their first parent.
struct QmrConfig {
  int n_causal = 4;
  int n_intermediate = 4;
  int n_symptoms = 8;
  int parents_per_symptom = 2;
  double evidence_fraction = 0.25;
  std::uint64_t seed = 1;
  double leak = 0.01;
  double activation = 0.8;

  /// Throws std::invalid_argument.
  void validate() const;
};

GeneratedModel gen_qmr(const QmrConfig& cfg);

/// n x n grid of small per-cell networks x = chain(c) joined by agreement
/// potentials e^coupling vs 1 between neighbouring x's.
struct IsingConfig {
  int n = 3;
  double coupling_strength = 0.5;
  int prior_bn_depth = 2;
  double evidence_fraction = 0.2;
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument.
  void validate() const;
};

GeneratedModel gen_mixed_ising(const IsingConfig& cfg);

/// An expanded model ready for inference.
struct InstantiatedModel {
  std::string id;
  ExpandedModel model;
  FactorSet extra;
  std::vector<VarId> queries;
};

InstantiatedModel instantiate(const GeneratedModel& g);

/// One draw from the generative process, indexed by VarId. Variables of
/// unselected branches are drawn too.
std::vector<Value> sample_forward(const ExpandedModel& model, std::mt19937_64& rng);

}  // namespace sfi

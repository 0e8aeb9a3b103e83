#pragma once

#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sfi/decomp.h"
#include "sfi/generators.h"
#include "sfi/solvers.h"

namespace sfi {

/// A decomposition plus an inference strategy, named like `hier-BP10`.
struct BenchStrategy {
  std::string name;
  std::shared_ptr<const DecompositionStrategy> decomposition;
  std::shared_ptr<const InferenceStrategy> inference;
};

/// Accepts `<flat|hier|bounded:N>-<VE|BPn|GSn>` and `hybrid-VE/BPn`,
/// `hybrid-VE/GSn` (hierarchical decomposition, hybrid inference).
/// `base` supplies thresholds, seed and memory cap. Throws std::invalid_argument.
BenchStrategy parse_strategy(const std::string& name, const SolverConfig& base = {});

/// One benchmark model with the sweep parameter it belongs to.
struct BenchModel {
  InstantiatedModel inst;
  int size = 0;
  std::uint64_t seed = 0;
};

struct RunResult {
  std::string model;
  std::string strategy;
  int size = 0;
  std::uint64_t seed = 0;
  double time_ms = 0;
  bool completed = false;
  std::string failure;
  std::map<VarId, Factor> marginals;
  std::optional<double> mean_abs_err;  // only with a reference
  std::vector<AlgorithmChoice> log;
  DecompStats stats;
};

struct BenchOptions {
  SolverConfig solver;
  /// Parallel cells; 1 runs serially.
  int jobs = 1;
};

/// Runs every strategy on every model. The reference is flat VE; a strategy
/// row whose run throws is recorded as not finished.
std::vector<RunResult> run_benchmark(const std::vector<BenchModel>& models, const std::vector<std::string>& strategies,
                                     const BenchOptions& options = {});

/// `model,strategy,seed,time_ms,mean_abs_err,status`; error is NA without a
/// reference, status is ok or DNF.
void write_csv(std::ostream& out, const std::vector<RunResult>& results);

/// Mean over seeds per (strategy, size) as a line chart; `err` selects the
/// error axis instead of time.
std::string render_svg(const std::vector<RunResult>& results, bool err, const std::string& title);

/// QMR sweep: causal = intermediate = n, symptoms = 2n, two parents.
std::vector<BenchModel> qmr_sweep(const std::vector<int>& sizes, const std::vector<std::uint64_t>& seeds);
/// Mixed Ising sweep over grid sides.
std::vector<BenchModel> ising_sweep(const std::vector<int>& sizes, const std::vector<std::uint64_t>& seeds);

}  // namespace sfi

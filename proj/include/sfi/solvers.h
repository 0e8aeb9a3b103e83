#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "sfi/factor.h"

namespace sfi {

struct SolverConfig {
  /// VE is chosen when the estimated elimination cost is below this.
  double ve_cost_threshold = 1e5;
  double determinism_threshold = 0.5;
  int bp_iterations = 10;
  double bp_damping = 0.0;
  int gibbs_samples = 1000;
  /// Negative means 10% of gibbs_samples.
  int gibbs_burnin = -1;
  std::uint64_t seed = 1;
  std::size_t max_cells = std::size_t{1} << 25;

  /// Throws std::invalid_argument.
  void validate() const;
  int burnin() const { return gibbs_burnin >= 0 ? gibbs_burnin : gibbs_samples / 10; }
};

enum class Algorithm { VE, BP, GS };
std::string algorithm_name(Algorithm a);

/// One sub-model solve: the algorithm used and the numbers behind the choice.
struct AlgorithmChoice {
  Algorithm choice = Algorithm::VE;
  std::size_t scope_vars = 0;
  double ve_cost = 0;
  double det_frac = 0;
  long long time_ms = 0;

  /// `solve scope=<k vars> choice=<VE|BP|GS> ve_cost=<float> det_frac=<float> time_ms=<int>`
  std::string str() const;
};

/// Thread-safe append-only record of solver choices.
class SolveLog {
 public:
  void add(const AlgorithmChoice& c);
  std::vector<AlgorithmChoice> entries() const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::vector<AlgorithmChoice> entries_;
};

/// Returns a joint over exactly `keep` (sorted by id), unnormalized.
class InferenceStrategy {
 public:
  virtual ~InferenceStrategy() = default;
  virtual Factor solve(const FactorSet& fs, const VarSet& keep, SolveLog* log) const = 0;
  virtual std::string name() const = 0;
};

struct BpOptions {
  /// Run simplify() first.
  bool simplify = true;
};

/// Loopy sum-product with a synchronous schedule. A single kept variable is
/// read from its belief; for several, the joint is built by the chain rule
/// with earlier kept variables clamped.
Factor belief_propagation(const FactorSet& fs, const VarSet& keep, const SolverConfig& cfg,
                          const BpOptions& options = {});

struct GibbsOptions {
  bool block_deterministic = true;
  bool simplify = true;
  /// Initial-state search budget in visited nodes.
  std::size_t init_budget = 1000000;
  std::size_t max_block_vars = 12;
};

/// Single-chain blocked Gibbs sampler; returns visit frequencies over keep.
/// Throws InitializationFailure.
Factor gibbs(const FactorSet& fs, const VarSet& keep, const SolverConfig& cfg, const GibbsOptions& options = {});

std::shared_ptr<const InferenceStrategy> make_ve(const SolverConfig& cfg = {});
std::shared_ptr<const InferenceStrategy> make_bp(const SolverConfig& cfg = {});
std::shared_ptr<const InferenceStrategy> make_gibbs(const SolverConfig& cfg = {});
/// VE when ve_cost < threshold, else BP when the determinism fraction of the
/// simplified factors exceeds its threshold, else Gibbs. Logs every solve.
std::shared_ptr<const InferenceStrategy> make_hybrid(const SolverConfig& cfg = {});

}  // namespace sfi

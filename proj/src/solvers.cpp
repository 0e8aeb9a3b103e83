#include "sfi/solvers.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>

#include "sfi/analysis.h"
#include "sfi/ve.h"

namespace sfi {

namespace {

std::string shortest(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, const VarSet& scope, const VarSet& keep) {
  std::uint64_t h = splitmix(seed);
  for (VarId v : scope) h = splitmix(h ^ v.index);
  h = splitmix(h ^ 0x5eedULL);
  for (VarId v : keep) h = splitmix(h ^ v.index);
  return h;
}

void normalize_in_place(std::vector<double>& m) {
  double s = 0.0;
  for (double x : m) s += x;
  if (!(s > 0.0) || !std::isfinite(s)) {
    std::fill(m.begin(), m.end(), 1.0 / static_cast<double>(m.size()));
    return;
  }
  for (double& x : m) x /= s;
}

/// Bipartite factor graph with flooding sum-product.
class FactorGraph {
 public:
  explicit FactorGraph(const FactorSet& fs) : factors_(fs) {
    auto cards = cards_of(fs);
    for (const auto& [v, k] : cards) {
      index_[v] = vars_.size();
      vars_.push_back(v);
      cards_.push_back(k);
    }
    var_edges_.resize(vars_.size());
    for (std::size_t f = 0; f < factors_.size(); ++f) {
      std::vector<std::size_t> es;
      for (VarId v : factors_[f].vars()) {
        std::size_t e = edge_var_.size();
        edge_var_.push_back(index_.at(v));
        edge_factor_.push_back(f);
        var_edges_[index_.at(v)].push_back(e);
        es.push_back(e);
      }
      factor_edges_.push_back(std::move(es));
    }
  }

  /// Beliefs for every variable after `iterations` synchronous sweeps.
  std::map<VarId, std::vector<double>> run(int iterations, double damping) const {
    std::size_t ne = edge_var_.size();
    std::vector<std::vector<double>> to_factor(ne), to_var(ne);
    for (std::size_t e = 0; e < ne; ++e) {
      std::size_t k = cards_[edge_var_[e]];
      to_factor[e].assign(k, 1.0 / static_cast<double>(k));
      to_var[e].assign(k, 1.0 / static_cast<double>(k));
    }
    for (int it = 0; it < iterations; ++it) {
      auto fresh = to_var;
      for (std::size_t f = 0; f < factors_.size(); ++f) factor_messages(f, to_factor, fresh);
      for (std::size_t e = 0; e < ne; ++e) {
        if (damping > 0.0)
          for (std::size_t i = 0; i < fresh[e].size(); ++i)
            fresh[e][i] = (1.0 - damping) * fresh[e][i] + damping * to_var[e][i];
        normalize_in_place(fresh[e]);
      }
      to_var = std::move(fresh);
      for (std::size_t v = 0; v < vars_.size(); ++v) {
        for (std::size_t e : var_edges_[v]) {
          std::vector<double> m(cards_[v], 1.0);
          for (std::size_t g : var_edges_[v]) {
            if (g == e) continue;
            for (std::size_t i = 0; i < m.size(); ++i) m[i] *= to_var[g][i];
          }
          normalize_in_place(m);
          to_factor[e] = std::move(m);
        }
      }
    }
    std::map<VarId, std::vector<double>> out;
    for (std::size_t v = 0; v < vars_.size(); ++v) {
      std::vector<double> b(cards_[v], 1.0);
      for (std::size_t e : var_edges_[v])
        for (std::size_t i = 0; i < b.size(); ++i) b[i] *= to_var[e][i];
      normalize_in_place(b);
      out[vars_[v]] = std::move(b);
    }
    return out;
  }

 private:
  void factor_messages(std::size_t f, const std::vector<std::vector<double>>& in,
                       std::vector<std::vector<double>>& out) const {
    const Factor& fac = factors_[f];
    const auto& es = factor_edges_[f];
    std::size_t m = es.size();
    for (std::size_t j = 0; j < m; ++j) std::fill(out[es[j]].begin(), out[es[j]].end(), 0.0);
    std::vector<std::size_t> idx(m, 0);
    const auto& t = fac.table();
    for (std::size_t n = 0; n < t.size(); ++n) {
      if (t[n] != 0.0) {
        for (std::size_t j = 0; j < m; ++j) {
          double w = t[n];
          for (std::size_t i = 0; i < m && w != 0.0; ++i)
            if (i != j) w *= in[es[i]][idx[i]];
          out[es[j]][idx[j]] += w;
        }
      }
      for (std::size_t k = m; k-- > 0;) {
        if (++idx[k] < fac.cards()[k]) break;
        idx[k] = 0;
      }
    }
  }

  FactorSet factors_;
  std::vector<VarId> vars_;
  std::vector<std::size_t> cards_;
  std::map<VarId, std::size_t> index_;
  std::vector<std::size_t> edge_var_, edge_factor_;
  std::vector<std::vector<std::size_t>> var_edges_, factor_edges_;
};

Factor keep_order_factor(const std::vector<VarId>& keep, const std::vector<std::size_t>& cards,
                         std::vector<double> table) {
  return Factor(keep, cards, std::move(table));
}

}  // namespace

void SolverConfig::validate() const {
  if (!(ve_cost_threshold > 0.0) && !std::isinf(ve_cost_threshold))
    throw std::invalid_argument("ve_cost_threshold must be positive");
  if (!(determinism_threshold >= 0.0 && determinism_threshold <= 1.0))
    throw std::invalid_argument("determinism_threshold must be in [0, 1]");
  if (bp_iterations < 1) throw std::invalid_argument("bp_iterations must be positive");
  if (!(bp_damping >= 0.0 && bp_damping < 1.0)) throw std::invalid_argument("bp_damping must be in [0, 1)");
  if (gibbs_samples < 1) throw std::invalid_argument("gibbs_samples must be positive");
}

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::VE: return "VE";
    case Algorithm::BP: return "BP";
    case Algorithm::GS: return "GS";
  }
  return "?";
}

std::string AlgorithmChoice::str() const {
  return "solve scope=" + std::to_string(scope_vars) + " choice=" + algorithm_name(choice) +
         " ve_cost=" + shortest(ve_cost) + " det_frac=" + shortest(det_frac) + " time_ms=" + std::to_string(time_ms);
}

void SolveLog::add(const AlgorithmChoice& c) {
  std::lock_guard<std::mutex> lock(mu_);
  entries_.push_back(c);
}

std::vector<AlgorithmChoice> SolveLog::entries() const {
  std::lock_guard<std::mutex> lock(mu_);
  return entries_;
}

std::size_t SolveLog::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return entries_.size();
}

Factor belief_propagation(const FactorSet& fs, const VarSet& keep, const SolverConfig& cfg,
                          const BpOptions& options) {
  FactorSet base = options.simplify ? simplify(fs, keep) : fs;
  auto cards = cards_of(base);
  std::vector<VarId> kv(keep.begin(), keep.end());
  std::vector<std::size_t> kc;
  for (VarId v : kv) {
    if (!cards.count(v))
      throw InferenceError(InferenceError::Kind::UnknownVariable,
                           "kept variable " + std::to_string(v.index) + " is not in any factor");
    kc.push_back(cards[v]);
  }
  if (kv.empty()) return Factor();

  std::size_t total = 1;
  for (auto c : kc) total *= c;
  std::vector<double> joint(total, 0.0);
  std::vector<std::size_t> clamp;
  // chain rule: P(k1) P(k2 | k1) ... with earlier kept variables clamped
  std::function<void(std::size_t, double, std::size_t)> expand = [&](std::size_t depth, double weight,
                                                                       std::size_t offset) {
    FactorSet g = base;
    for (std::size_t i = 0; i < depth; ++i) g.push_back(indicator(kv[i], kc[i], clamp[i]));
    auto beliefs = FactorGraph(g).run(cfg.bp_iterations, cfg.bp_damping);
    const auto& b = beliefs.at(kv[depth]);
    for (std::size_t x = 0; x < b.size(); ++x) {
      double w = weight * b[x];
      if (w <= 0.0) continue;
      std::size_t at = offset * kc[depth] + x;
      if (depth + 1 == kv.size()) {
        joint[at] = w;
      } else {
        clamp.push_back(x);
        expand(depth + 1, w, at);
        clamp.pop_back();
      }
    }
  };
  expand(0, 1.0, 0);
  return keep_order_factor(kv, kc, std::move(joint));
}

Factor gibbs(const FactorSet& fs, const VarSet& keep, const SolverConfig& cfg, const GibbsOptions& options) {
  FactorSet base = options.simplify ? simplify(fs, keep) : fs;
  auto card_map = cards_of(base);
  std::vector<VarId> vars;
  std::vector<std::size_t> cards;
  std::map<VarId, std::size_t> index;
  for (const auto& [v, k] : card_map) {
    index[v] = vars.size();
    vars.push_back(v);
    cards.push_back(k);
  }
  for (VarId k : keep)
    if (!index.count(k))
      throw InferenceError(InferenceError::Kind::UnknownVariable,
                           "kept variable " + std::to_string(k.index) + " is not in any factor");
  std::size_t n = vars.size();

  struct Local {
    std::vector<std::size_t> vars;
    std::vector<std::size_t> strides;
    const std::vector<double>* table;
  };
  std::vector<Local> locals;
  std::vector<std::vector<std::size_t>> touching(n);
  for (std::size_t f = 0; f < base.size(); ++f) {
    Local l;
    l.table = &base[f].table();
    std::size_t s = 1;
    l.strides.assign(base[f].vars().size(), 0);
    for (std::size_t k = base[f].vars().size(); k-- > 0;) {
      l.strides[k] = s;
      s *= base[f].cards()[k];
    }
    for (VarId v : base[f].vars()) {
      l.vars.push_back(index[v]);
      touching[index[v]].push_back(f);
    }
    locals.push_back(std::move(l));
  }
  std::vector<std::size_t> state(n, 0);
  auto entry = [&](std::size_t f) {
    const Local& l = locals[f];
    std::size_t at = 0;
    for (std::size_t k = 0; k < l.vars.size(); ++k) at += state[l.vars[k]] * l.strides[k];
    return (*l.table)[at];
  };

  std::vector<std::vector<std::size_t>> groups;
  if (options.block_deterministic) {
    for (const auto& b : blocks(base)) {
      std::vector<std::size_t> g;
      for (VarId v : b) g.push_back(index[v]);
      groups.push_back(std::move(g));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) groups.push_back({i});
  }
  for (const auto& g : groups) {
    std::size_t space = 1;
    for (auto i : g) space *= cards[i];
    if (g.size() > options.max_block_vars || space > (std::size_t{1} << 16))
      throw InferenceError(InferenceError::Kind::InitializationFailure,
                           "sampling block of " + std::to_string(g.size()) + " variables exceeds the cap of " +
                               std::to_string(options.max_block_vars));
  }

  std::mt19937_64 rng(derive_seed(cfg.seed, VarSet(vars.begin(), vars.end()), keep));

  // initial state: depth-first search checking factors once fully assigned
  std::vector<std::vector<std::size_t>> closing(n);
  for (std::size_t f = 0; f < locals.size(); ++f) {
    std::size_t last = 0;
    for (auto v : locals[f].vars) last = std::max(last, v);
    if (!locals[f].vars.empty()) closing[last].push_back(f);
  }
  std::size_t visited = 0;
  std::function<bool(std::size_t)> search = [&](std::size_t i) {
    if (i == n) return true;
    std::vector<std::size_t> values(cards[i]);
    for (std::size_t x = 0; x < values.size(); ++x) values[x] = x;
    std::shuffle(values.begin(), values.end(), rng);
    for (std::size_t x : values) {
      if (++visited > options.init_budget) return false;
      state[i] = x;
      bool ok = true;
      for (std::size_t f : closing[i])
        if (entry(f) <= 0.0) {
          ok = false;
          break;
        }
      if (ok && search(i + 1)) return true;
    }
    return false;
  };
  if (!search(0))
    throw InferenceError(InferenceError::Kind::InitializationFailure, "no consistent initial state found");

  std::vector<std::vector<std::size_t>> group_factors;
  for (const auto& g : groups) {
    std::vector<std::size_t> fsx;
    for (auto i : g) fsx.insert(fsx.end(), touching[i].begin(), touching[i].end());
    std::sort(fsx.begin(), fsx.end());
    fsx.erase(std::unique(fsx.begin(), fsx.end()), fsx.end());
    group_factors.push_back(std::move(fsx));
  }

  std::vector<std::size_t> kidx;
  std::vector<std::size_t> kcards;
  for (VarId k : keep) {
    kidx.push_back(index[k]);
    kcards.push_back(cards[index[k]]);
  }
  std::size_t ksize = 1;
  for (auto c : kcards) ksize *= c;
  std::vector<double> counts(ksize, 0.0);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> weights;
  int burnin = cfg.burnin();
  for (int sweep = 0; sweep < burnin + cfg.gibbs_samples; ++sweep) {
    for (std::size_t b = 0; b < groups.size(); ++b) {
      const auto& g = groups[b];
      std::size_t space = 1;
      for (auto i : g) space *= cards[i];
      weights.assign(space, 0.0);
      double total = 0.0;
      for (std::size_t c = 0; c < space; ++c) {
        std::size_t rest = c;
        for (std::size_t k = g.size(); k-- > 0;) {
          state[g[k]] = rest % cards[g[k]];
          rest /= cards[g[k]];
        }
        double w = 1.0;
        for (std::size_t f : group_factors[b]) {
          w *= entry(f);
          if (w == 0.0) break;
        }
        weights[c] = w;
        total += w;
      }
      std::size_t pick = space - 1;
      if (total > 0.0) {
        double u = unit(rng) * total;
        for (std::size_t c = 0; c < space; ++c) {
          if (u < weights[c]) {
            pick = c;
            break;
          }
          u -= weights[c];
        }
        while (weights[pick] == 0.0 && pick > 0) --pick;
      }
      for (std::size_t k = g.size(); k-- > 0;) {
        state[g[k]] = pick % cards[g[k]];
        pick /= cards[g[k]];
      }
    }
    if (sweep >= burnin) {
      std::size_t at = 0;
      for (std::size_t k = 0; k < kidx.size(); ++k) at = at * kcards[k] + state[kidx[k]];
      counts[at] += 1.0;
    }
  }
  for (double& c : counts) c /= static_cast<double>(cfg.gibbs_samples);
  return Factor(std::vector<VarId>(keep.begin(), keep.end()), kcards, std::move(counts));
}

namespace {

class VeStrategy : public InferenceStrategy {
 public:
  explicit VeStrategy(SolverConfig cfg) : cfg_(cfg) {}
  Factor solve(const FactorSet& fs, const VarSet& keep, SolveLog*) const override {
    VeOptions o;
    o.max_cells = cfg_.max_cells;
    return variable_elimination(fs, keep, o);
  }
  std::string name() const override { return "VE"; }

 private:
  SolverConfig cfg_;
};

class BpStrategy : public InferenceStrategy {
 public:
  explicit BpStrategy(SolverConfig cfg) : cfg_(cfg) {}
  Factor solve(const FactorSet& fs, const VarSet& keep, SolveLog*) const override {
    return belief_propagation(fs, keep, cfg_);
  }
  std::string name() const override { return "BP" + std::to_string(cfg_.bp_iterations); }

 private:
  SolverConfig cfg_;
};

class GibbsStrategy : public InferenceStrategy {
 public:
  explicit GibbsStrategy(SolverConfig cfg) : cfg_(cfg) {}
  Factor solve(const FactorSet& fs, const VarSet& keep, SolveLog*) const override { return gibbs(fs, keep, cfg_); }
  std::string name() const override { return "GS" + std::to_string(cfg_.gibbs_samples); }

 private:
  SolverConfig cfg_;
};

class HybridStrategy : public InferenceStrategy {
 public:
  explicit HybridStrategy(SolverConfig cfg) : cfg_(cfg) {}
  Factor solve(const FactorSet& fs, const VarSet& keep, SolveLog* log) const override {
    auto start = std::chrono::steady_clock::now();
    AlgorithmChoice c;
    c.scope_vars = scope_of(fs).size();
    c.ve_cost = ve_cost(fs, keep);
    c.det_frac = determinism_fraction(simplify(fs, keep));
    if (c.ve_cost < cfg_.ve_cost_threshold) {
      c.choice = Algorithm::VE;
    } else if (c.det_frac > cfg_.determinism_threshold) {
      c.choice = Algorithm::BP;
    } else {
      c.choice = Algorithm::GS;
    }
    Factor out;
    switch (c.choice) {
      case Algorithm::VE: {
        VeOptions o;
        o.max_cells = cfg_.max_cells;
        out = variable_elimination(fs, keep, o);
        break;
      }
      case Algorithm::BP: out = belief_propagation(fs, keep, cfg_); break;
      case Algorithm::GS: out = gibbs(fs, keep, cfg_); break;
    }
    c.time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    if (log) log->add(c);
    return out;
  }
  std::string name() const override {
    return "hybrid(VE/BP" + std::to_string(cfg_.bp_iterations) + "/GS" + std::to_string(cfg_.gibbs_samples) + ")";
  }

 private:
  SolverConfig cfg_;
};

}  // namespace

std::shared_ptr<const InferenceStrategy> make_ve(const SolverConfig& cfg) {
  cfg.validate();
  return std::make_shared<VeStrategy>(cfg);
}
std::shared_ptr<const InferenceStrategy> make_bp(const SolverConfig& cfg) {
  cfg.validate();
  return std::make_shared<BpStrategy>(cfg);
}
std::shared_ptr<const InferenceStrategy> make_gibbs(const SolverConfig& cfg) {
  cfg.validate();
  return std::make_shared<GibbsStrategy>(cfg);
}
std::shared_ptr<const InferenceStrategy> make_hybrid(const SolverConfig& cfg) {
  cfg.validate();
  return std::make_shared<HybridStrategy>(cfg);
}

}  // namespace sfi

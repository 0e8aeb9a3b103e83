#include "sfi/decomp.h"

#include <algorithm>
#include <cstring>
#include <functional>
#include <stdexcept>

#include "sfi/lower.h"

namespace sfi {

namespace {

void points_in(const ExpandedModel& model, ScopeId q, std::vector<DecompositionPoint>& out) {
  for (VarId v : model.scope(q).own_vars) {
    const auto* c = std::get_if<ExpandedChain>(&model.var(v).def);
    if (!c) continue;
    for (const auto& [value, sid] : c->branches) {
      const auto& s = model.scope(sid);
      out.push_back(DecompositionPoint{*s.outcome, v, value, sid, s.first, s.last, s.externals});
      points_in(model, sid, out);
    }
  }
}

class FlatStrategy : public DecompositionStrategy {
 public:
  FactorSet solve(Decomposer& d, ScopeId scope, const VarSet&, const InferenceStrategy&) const override {
    return d.subtree_factors(scope);
  }
  std::string name() const override { return "flat"; }
};

class RecursiveStrategy : public DecompositionStrategy {
 public:
  FactorSet solve(Decomposer& d, ScopeId scope, const VarSet& relevant, const InferenceStrategy& is) const override {
    return {d.solve_branch(scope, relevant, *this, is)};
  }
  std::string name() const override { return "recursive"; }
};

class BoundedStrategy : public DecompositionStrategy {
 public:
  explicit BoundedStrategy(std::size_t n) : n_(n) {}
  FactorSet solve(Decomposer& d, ScopeId scope, const VarSet& relevant, const InferenceStrategy& is) const override {
    if (relevant.size() > n_) return d.subtree_factors(scope);
    return {d.solve_branch(scope, relevant, *this, is)};
  }
  std::string name() const override { return "bounded:" + std::to_string(n_); }

 private:
  std::size_t n_;
};

}  // namespace

std::vector<DecompositionPoint> find_points(const ExpandedModel& model) {
  std::vector<DecompositionPoint> out;
  if (model.scopes().empty()) return out;
  points_in(model, kRootScope, out);
  return out;
}

std::shared_ptr<const DecompositionStrategy> strategy_flat() { return std::make_shared<FlatStrategy>(); }
std::shared_ptr<const DecompositionStrategy> strategy_recursive() { return std::make_shared<RecursiveStrategy>(); }
std::shared_ptr<const DecompositionStrategy> strategy_bounded(std::size_t n) {
  return std::make_shared<BoundedStrategy>(n);
}

std::shared_ptr<const DecompositionStrategy> parse_decomposition(const std::string& name) {
  if (name == "flat") return strategy_flat();
  if (name == "recursive") return strategy_recursive();
  if (name.rfind("bounded:", 0) == 0) {
    std::string digits = name.substr(8);
    if (!digits.empty() && std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }) &&
        digits.size() < 10)
      return strategy_bounded(std::stoul(digits));
  }
  throw std::invalid_argument("unknown decomposition strategy '" + name + "' (expected flat, recursive or bounded:N)");
}

Decomposer::Decomposer(const ExpandedModel& model, FactorSet extra, DecompOptions options)
    : model_(model), by_var_(lower_by_variable(model)), extra_(std::move(extra)), options_(options) {}

FactorSet Decomposer::own_factors(ScopeId q) const {
  FactorSet out;
  for (VarId v : model_.scope(q).own_vars) out.insert(out.end(), by_var_[v.index].begin(), by_var_[v.index].end());
  if (q == kRootScope) out.insert(out.end(), extra_.begin(), extra_.end());
  return out;
}

FactorSet Decomposer::subtree_factors(ScopeId q) const {
  const auto& s = model_.scope(q);
  FactorSet out;
  for (std::uint32_t i = s.first.index; i < s.last.index; ++i)
    out.insert(out.end(), by_var_[i].begin(), by_var_[i].end());
  if (q == kRootScope) out.insert(out.end(), extra_.begin(), extra_.end());
  return out;
}

FactorSet Decomposer::collect(ScopeId q, const VarSet& targets, const DecompositionStrategy& ds,
                              const InferenceStrategy& is) {
  FactorSet acc = own_factors(q);
  for (VarId v : model_.scope(q).own_vars) {
    const auto* c = std::get_if<ExpandedChain>(&model_.var(v).def);
    if (!c) continue;
    for (const auto& [value, sid] : c->branches) {
      const auto& s = model_.scope(sid);
      ++stats_.points_visited;
      if (options_.check_lemma) check_lemma(sid);
      VarSet relevant = s.externals;
      relevant.insert(*s.outcome);
      for (VarId t : targets)
        if (s.contains(t)) relevant.insert(t);
      FactorSet part = ds.solve(*this, sid, relevant, is);
      for (auto& f : part) acc.push_back(std::move(f));
    }
  }
  return acc;
}

Factor Decomposer::decompose(ScopeId q, const VarSet& E, const DecompositionStrategy& ds,
                             const InferenceStrategy& is) {
  const auto& s = model_.scope(q);
  for (VarId e : E)
    if (!s.contains(e) && !s.externals.count(e))
      throw InferenceError(InferenceError::Kind::ScopeViolation,
                           "requested variable " + model_.name(e) + " is not visible in the scope");
  return run_is(is, collect(q, E, ds, is), E);
}

Factor Decomposer::run_is(const InferenceStrategy& is, const FactorSet& fs, const VarSet& keep) {
  ++stats_.is_calls;
  Factor out = is.solve(fs, keep, &log_);
  if (out.vars() != std::vector<VarId>(keep.begin(), keep.end()))
    throw InferenceError(InferenceError::Kind::ScopeViolation,
                         "inference strategy " + is.name() + " returned a factor over the wrong variables");
  return out;
}

std::string Decomposer::branch_key(ScopeId branch) const {
  const auto& s = model_.scope(branch);
  std::string key;
  auto put = [&](const void* p, std::size_t n) { key.append(static_cast<const char*>(p), n); };
  for (std::uint32_t i = s.first.index; i < s.last.index; ++i) {
    for (const auto& f : by_var_[i]) {
      std::uint64_t n = f.vars().size();
      put(&n, sizeof n);
      for (std::size_t k = 0; k < f.vars().size(); ++k) {
        std::uint64_t rel = f.vars()[k].index - s.first.index;
        std::uint64_t card = f.cards()[k];
        put(&rel, sizeof rel);
        put(&card, sizeof card);
      }
      put(f.table().data(), f.table().size() * sizeof(double));
    }
    key.push_back('|');
  }
  std::uint64_t out = s.outcome->index - s.first.index;
  put(&out, sizeof out);
  return key;
}

Factor Decomposer::solve_branch(ScopeId branch, const VarSet& relevant, const DecompositionStrategy& ds,
                                const InferenceStrategy& is) {
  const auto& s = model_.scope(branch);
  bool cacheable = options_.cache && s.externals.empty() && relevant.size() == 1;
  if (!cacheable) return decompose(branch, relevant, ds, is);
  std::string key = ds.name() + "/" + is.name() + "/" + branch_key(branch);
  VarId o = *s.outcome;
  if (auto it = cache_.find(key); it != cache_.end()) {
    ++stats_.cache_hits;
    return Factor({o}, {model_.card(o)}, it->second.table());
  }
  Factor f = decompose(branch, relevant, ds, is);
  cache_.emplace(std::move(key), f);
  return f;
}

bool Decomposer::check_lemma(ScopeId branch) {
  const auto& s = model_.scope(branch);
  ++stats_.lemma_checks;
  // x is shared when factors owned inside and outside the range both mention it
  auto inside = [&](std::uint32_t owner) { return owner >= s.first.index && owner < s.last.index; };
  VarSet mentioned_in, mentioned_out;
  for (std::uint32_t i = 0; i < by_var_.size(); ++i) {
    bool in = inside(i);
    for (const auto& f : by_var_[i]) (in ? mentioned_in : mentioned_out).insert(f.vars().begin(), f.vars().end());
  }
  for (const auto& f : extra_) mentioned_out.insert(f.vars().begin(), f.vars().end());
  bool ok = true;
  for (VarId x : mentioned_in)
    if (mentioned_out.count(x) && x != *s.outcome && !s.externals.count(x)) ok = false;
  if (!ok) ++stats_.lemma_violations;
  return ok;
}

QueryResult sfi_marginals(const ExpandedModel& model, const std::vector<VarId>& queries,
                          const DecompositionStrategy& ds, const InferenceStrategy& is, const FactorSet& extra,
                          const DecompOptions& options) {
  for (VarId q : queries)
    if (q.index >= model.size()) throw InferenceError(InferenceError::Kind::UnknownVariable, "unknown query variable");
  Decomposer d(model, extra, options);
  VarSet targets(queries.begin(), queries.end());
  FactorSet acc = d.collect(kRootScope, targets, ds, is);
  QueryResult out;
  for (VarId q : queries) {
    if (out.marginals.count(q)) continue;
    out.marginals.emplace(q, normalize(d.run_is(is, acc, {q})));
  }
  out.stats = d.stats();
  out.log = d.log().entries();
  return out;
}

Factor sfi_query(const ExpandedModel& model, VarId q, const DecompositionStrategy& ds, const InferenceStrategy& is,
                 const FactorSet& extra, const DecompOptions& options) {
  return sfi_marginals(model, {q}, ds, is, extra, options).marginals.at(q);
}

}  // namespace sfi

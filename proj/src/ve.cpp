#include "sfi/ve.h"

#include <algorithm>
#include <list>
#include <map>

namespace sfi {

namespace {

struct Scope {
  VarSet vars;
  double cells = 1;
};

double cells_of(const VarSet& vars, const std::map<VarId, std::size_t>& cards) {
  double n = 1;
  for (VarId v : vars) n *= static_cast<double>(cards.at(v));
  return n;
}

EliminationStep simulate_step(std::vector<Scope>& scopes, VarId x, const std::map<VarId, std::size_t>& cards) {
  EliminationStep step;
  step.var = x;
  VarSet merged;
  std::vector<Scope> rest;
  for (auto& s : scopes) {
    if (s.vars.count(x)) {
      merged.insert(s.vars.begin(), s.vars.end());
      step.consumed_cells += s.cells;
    } else {
      rest.push_back(std::move(s));
    }
  }
  step.product_cells = merged.empty() ? 0 : cells_of(merged, cards);
  merged.erase(x);
  step.new_cells = step.product_cells == 0 ? 0 : cells_of(merged, cards);
  if (step.product_cells > 0) rest.push_back(Scope{merged, step.new_cells});
  scopes = std::move(rest);
  return step;
}

std::vector<Scope> scopes_of(const FactorSet& fs) {
  std::vector<Scope> out;
  for (const auto& f : fs) out.push_back(Scope{VarSet(f.vars().begin(), f.vars().end()), static_cast<double>(f.size())});
  return out;
}

void record(EliminationOrder& eo, const EliminationStep& step) {
  if (eo.steps.empty() || step.cost() > eo.max_cost) eo.max_cost = step.cost();
  eo.max_product_cells = std::max(eo.max_product_cells, step.product_cells);
  eo.order.push_back(step.var);
  eo.steps.push_back(step);
}

}  // namespace

EliminationOrder evaluate_order(const FactorSet& fs, const std::vector<VarId>& order) {
  auto cards = cards_of(fs);
  auto scopes = scopes_of(fs);
  EliminationOrder eo;
  for (VarId x : order) record(eo, simulate_step(scopes, x, cards));
  return eo;
}

EliminationOrder elimination_order(const FactorSet& fs, const VarSet& keep) {
  auto cards = cards_of(fs);
  auto scopes = scopes_of(fs);
  std::map<VarId, VarSet> adj;
  for (const auto& [v, k] : cards) adj[v];
  for (const auto& f : fs)
    for (VarId a : f.vars())
      for (VarId b : f.vars())
        if (a != b) adj[a].insert(b);
  VarSet remaining;
  for (const auto& [v, k] : cards)
    if (!keep.count(v)) remaining.insert(v);

  EliminationOrder eo;
  while (!remaining.empty()) {
    VarId best{};
    std::size_t best_fill = SIZE_MAX;
    for (VarId v : remaining) {
      const auto& nb = adj[v];
      std::size_t fill = 0;
      for (auto i = nb.begin(); i != nb.end() && fill < best_fill; ++i)
        for (auto j = std::next(i); j != nb.end(); ++j)
          if (!adj[*i].count(*j)) ++fill;
      if (fill < best_fill) {
        best_fill = fill;
        best = v;
      }
    }
    const VarSet nb = adj[best];
    for (VarId a : nb) {
      adj[a].erase(best);
      for (VarId b : nb)
        if (a != b) adj[a].insert(b);
    }
    adj.erase(best);
    remaining.erase(best);
    record(eo, simulate_step(scopes, best, cards));
  }
  return eo;
}

double ve_cost(const FactorSet& fs, const VarSet& keep) { return elimination_order(fs, keep).max_cost; }

Factor variable_elimination(const FactorSet& fs, const VarSet& keep, const VeOptions& options) {
  VarSet scope = scope_of(fs);
  for (VarId k : keep)
    if (!scope.count(k))
      throw InferenceError(InferenceError::Kind::UnknownVariable,
                           "kept variable " + std::to_string(k.index) + " is not in any factor");
  std::vector<VarId> order;
  if (options.order) {
    order = *options.order;
    VarSet expected;
    for (VarId v : scope)
      if (!keep.count(v)) expected.insert(v);
    if (VarSet(order.begin(), order.end()) != expected || order.size() != expected.size())
      throw InferenceError(InferenceError::Kind::ScopeViolation, "elimination order does not match the scope");
  } else {
    order = elimination_order(fs, keep).order;
  }

  std::list<Factor> pool(fs.begin(), fs.end());
  auto guard = [&](double cells) {
    if (cells > static_cast<double>(options.max_cells))
      throw InferenceError(InferenceError::Kind::MemoryBudgetExceeded,
                           "intermediate factor of " + std::to_string(static_cast<long long>(cells)) +
                               " cells exceeds the budget");
  };
  std::map<VarId, std::size_t> cards = cards_of(fs);
  for (VarId x : order) {
    VarSet merged;
    std::vector<Factor> bucket;
    for (auto it = pool.begin(); it != pool.end();) {
      if (it->has(x)) {
        merged.insert(it->vars().begin(), it->vars().end());
        bucket.push_back(std::move(*it));
        it = pool.erase(it);
      } else {
        ++it;
      }
    }
    guard(cells_of(merged, cards));
    Factor f = product(bucket);
    pool.push_back(sum_out(f, x).rescaled());
  }
  VarSet rest;
  for (const auto& f : pool) rest.insert(f.vars().begin(), f.vars().end());
  guard(cells_of(rest, cards));
  Factor out;
  for (const auto& f : pool) out = product(out, f);
  return out;
}

}  // namespace sfi

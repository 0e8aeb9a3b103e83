#include "sfi/lower.h"

#include <algorithm>
#include <map>

namespace sfi {

FactorSet lower_variable(const ExpandedModel& model, VarId r) {
  const auto& info = model.var(r);
  std::size_t kr = model.card(r);
  if (std::holds_alternative<ExpandedValue>(info.def)) return {Factor({r}, {1}, {1.0})};

  if (const auto* p = std::get_if<ExpandedPrimitive>(&info.def)) {
    std::vector<double> table(kr, 0.0);
    for (const auto& [v, prob] : distribution_of(p->dist)) {
      if (prob <= 0.0) continue;
      table[*model.value_index(r, v)] = prob;
    }
    return {Factor({r}, {kr}, std::move(table))};
  }

  if (const auto* a = std::get_if<ExpandedApply>(&info.def)) {
    std::vector<VarId> distinct = a->args;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<std::size_t> slot(a->args.size());
    for (std::size_t i = 0; i < a->args.size(); ++i)
      slot[i] = static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), a->args[i]) -
                                         distinct.begin());
    // layout: args in distinct order, then r (fastest)
    std::vector<VarId> vars = distinct;
    std::vector<std::size_t> cards;
    for (VarId v : distinct) cards.push_back(model.card(v));
    vars.push_back(r);
    cards.push_back(kr);
    std::size_t combos = 1;
    for (std::size_t i = 0; i < distinct.size(); ++i) combos *= cards[i];
    std::vector<double> table(combos * kr, 0.0);
    std::vector<std::size_t> idx(distinct.size(), 0);
    std::vector<Value> args(a->args.size());
    for (std::size_t n = 0; n < combos; ++n) {
      for (std::size_t i = 0; i < args.size(); ++i) args[i] = model.support(a->args[i])[idx[slot[i]]];
      Value out = eval_fn(a->fn, args);
      table[n * kr + *model.value_index(r, out)] = 1.0;
      for (std::size_t k = idx.size(); k-- > 0;) {
        if (++idx[k] < cards[k]) break;
        idx[k] = 0;
      }
    }
    return {Factor(std::move(vars), std::move(cards), std::move(table))};
  }

  const auto& c = std::get<ExpandedChain>(info.def);
  FactorSet out;
  std::size_t kp = model.card(c.parent);
  for (const auto& [v, sid] : c.branches) {
    VarId o = *model.scope(sid).outcome;
    std::size_t ko = model.card(o);
    std::size_t pv = *model.value_index(c.parent, v);
    // layout: parent, r, outcome (fastest)
    std::vector<double> table(kp * kr * ko, 0.0);
    for (std::size_t p = 0; p < kp; ++p)
      for (std::size_t w = 0; w < kr; ++w)
        for (std::size_t x = 0; x < ko; ++x) {
          bool one = p != pv || model.support(r)[w] == model.support(o)[x];
          table[(p * kr + w) * ko + x] = one ? 1.0 : 0.0;
        }
    out.emplace_back(std::vector<VarId>{c.parent, r, o}, std::vector<std::size_t>{kp, kr, ko}, std::move(table));
  }
  out.push_back(Factor::constant({c.parent, r}, {kp, kr}, 1.0));
  return out;
}

std::vector<FactorSet> lower_by_variable(const ExpandedModel& model) {
  std::vector<FactorSet> out(model.size());
  for (VarId v : model.all_vars()) out[v.index] = lower_variable(model, v);
  for (const auto& [x, value] : model.evidence()) {
    FactorSet ev = condition(model, {}, {{x, value}});
    out[x.index].push_back(ev.front());
  }
  return out;
}

FactorSet lower(const ExpandedModel& model) {
  FactorSet out;
  for (auto& fs : lower_by_variable(model))
    for (auto& f : fs) out.push_back(std::move(f));
  return out;
}

}  // namespace sfi

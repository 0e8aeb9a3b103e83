#include "sfi/generators.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sfi/fn_expr.h"

namespace sfi {

namespace {

// Probabilities are drawn on a grid of hundredths so the printed model is exact.
double draw_prob(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng) / 100.0;
}

Lambda any_of(std::size_t n) {
  Lambda f;
  for (std::size_t i = 0; i < n; ++i) f.params.push_back("x" + std::to_string(i));
  f.body = FnExpr::param(0);
  for (std::size_t i = 1; i < n; ++i) f.body = FnExpr::binary(FnOp::Or, f.body, FnExpr::param(i));
  return f;
}

Lambda both() { return Lambda{{"x", "y"}, FnExpr::binary(FnOp::And, FnExpr::param(0), FnExpr::param(1))}; }

std::vector<std::string> pick_distinct(std::mt19937_64& rng, const std::vector<std::string>& pool, std::size_t k) {
  std::vector<std::string> copy = pool;
  std::shuffle(copy.begin(), copy.end(), rng);
  copy.resize(std::min(k, copy.size()));
  return copy;
}

// Noisy-or branch for a chain on parents[0] taking `parent_true`: a leak,
// plus an activation per parent that is on. The other parents are read from
// outside the branch.
Program noisy_or_branch(const QmrConfig& cfg, const std::vector<std::string>& parents, bool parent_true) {
  std::vector<Definition> defs;
  std::vector<std::string> causes{"leak"};
  defs.push_back({"leak", flip(cfg.leak)});
  if (parent_true) {
    defs.push_back({"act0", flip(cfg.activation)});
    causes.push_back("act0");
  }
  for (std::size_t k = 1; k < parents.size(); ++k) {
    std::string act = "act" + std::to_string(k), on = "on" + std::to_string(k);
    defs.push_back({act, flip(cfg.activation)});
    defs.push_back({on, apply({parents[k], act}, both())});
    causes.push_back(on);
  }
  defs.push_back({"outcome", apply(causes, any_of(causes.size()))});
  return Program({}, std::move(defs));
}

Expression noisy_or(const QmrConfig& cfg, const std::vector<std::string>& parents) {
  return chain(parents[0], {{Value::boolean(true), noisy_or_branch(cfg, parents, true)},
                            {Value::boolean(false), noisy_or_branch(cfg, parents, false)}});
}

Program cell_network(std::mt19937_64& rng, int depth) {
  if (depth <= 1) return Program({}, {{"outcome", flip(draw_prob(rng, 5, 95))}});
  Program t = cell_network(rng, depth - 1);
  Program f = cell_network(rng, depth - 1);
  return Program({}, {{"h", flip(draw_prob(rng, 5, 95))},
                      {"outcome", chain("h", {{Value::boolean(true), std::move(t)}, {Value::boolean(false), std::move(f)}})}});
}

}  // namespace

void QmrConfig::validate() const {
  if (n_causal < 1 || n_intermediate < 1 || n_symptoms < 1 || parents_per_symptom < 1)
    throw std::invalid_argument("qmr layer sizes and parents per symptom must be positive");
  if (parents_per_symptom > n_intermediate)
    throw std::invalid_argument("parents per symptom exceeds the number of intermediate diseases");
  if (!(evidence_fraction >= 0 && evidence_fraction <= 1)) throw std::invalid_argument("evidence fraction must lie in [0,1]");
  if (!(leak >= 0 && leak <= 1) || !(activation >= 0 && activation <= 1))
    throw std::invalid_argument("leak and activation must lie in [0,1]");
}

GeneratedModel gen_qmr(const QmrConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  GeneratedModel g;
  g.id = "qmr-c" + std::to_string(cfg.n_causal) + "-i" + std::to_string(cfg.n_intermediate) + "-s" +
         std::to_string(cfg.n_symptoms) + "-seed" + std::to_string(cfg.seed);
  std::vector<Definition> defs;
  std::vector<std::string> causal, intermediate, symptoms;
  for (int i = 0; i < cfg.n_causal; ++i) {
    causal.push_back("c" + std::to_string(i));
    defs.push_back({causal.back(), flip(draw_prob(rng, 5, 50))});
  }
  for (int i = 0; i < cfg.n_intermediate; ++i) {
    intermediate.push_back("d" + std::to_string(i));
    auto parents = pick_distinct(rng, causal, static_cast<std::size_t>(cfg.parents_per_symptom));
    defs.push_back({intermediate.back(), noisy_or(cfg, parents)});
  }
  for (int i = 0; i < cfg.n_symptoms; ++i) {
    symptoms.push_back("s" + std::to_string(i));
    auto parents = pick_distinct(rng, intermediate, static_cast<std::size_t>(cfg.parents_per_symptom));
    defs.push_back({symptoms.back(), noisy_or(cfg, parents)});
  }
  g.program = Program({}, std::move(defs));

  // evidence: one forward draw, each symptom and causal disease kept with
  // probability evidence_fraction
  if (cfg.evidence_fraction > 0) {
    ExpandedModel m = expand(g.program);
    std::vector<Value> draw = sample_forward(m, rng);
    std::bernoulli_distribution keep(cfg.evidence_fraction);
    for (const auto& names : {symptoms, causal})
      for (const auto& n : names)
        if (keep(rng)) g.evidence.emplace(n, draw[m.at(n).index]);
  }
  for (const auto& names : {causal, intermediate})
    for (const auto& n : names)
      if (!g.evidence.count(n)) g.queries.push_back(n);
  return g;
}

void IsingConfig::validate() const {
  if (n < 2) throw std::invalid_argument("grid side must be at least 2");
  if (!(coupling_strength >= 0) || !std::isfinite(coupling_strength))
    throw std::invalid_argument("coupling strength must be a finite non-negative number");
  if (prior_bn_depth < 1 || prior_bn_depth > 8) throw std::invalid_argument("prior network depth must be in 1..8");
  if (!(evidence_fraction >= 0 && evidence_fraction <= 1)) throw std::invalid_argument("evidence fraction must lie in [0,1]");
}

GeneratedModel gen_mixed_ising(const IsingConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  GeneratedModel g;
  g.id = "ising-n" + std::to_string(cfg.n) + "-seed" + std::to_string(cfg.seed);
  auto cell = [](const char* p, int i, int j) { return std::string(p) + std::to_string(i) + "_" + std::to_string(j); };
  std::vector<Definition> defs;
  for (int i = 0; i < cfg.n; ++i)
    for (int j = 0; j < cfg.n; ++j) {
      std::string c = cell("c", i, j), x = cell("x", i, j);
      defs.push_back({c, flip(0.5)});
      Program t = cell_network(rng, cfg.prior_bn_depth);
      Program f = cell_network(rng, cfg.prior_bn_depth);
      defs.push_back({x, chain(c, {{Value::boolean(true), std::move(t)}, {Value::boolean(false), std::move(f)}})});
      g.queries.push_back(x);
    }
  g.program = Program({}, std::move(defs));

  double agree = std::exp(cfg.coupling_strength);
  std::vector<double> table{agree, 1.0, 1.0, agree};
  for (int i = 0; i < cfg.n; ++i)
    for (int j = 0; j < cfg.n; ++j) {
      if (j + 1 < cfg.n) g.potentials.push_back({cell("x", i, j), cell("x", i, j + 1), table});
      if (i + 1 < cfg.n) g.potentials.push_back({cell("x", i, j), cell("x", i + 1, j), table});
    }

  // a fixed share of the c's, chosen at random, observed at a random value
  std::vector<std::string> cs;
  for (int i = 0; i < cfg.n; ++i)
    for (int j = 0; j < cfg.n; ++j) cs.push_back(cell("c", i, j));
  std::shuffle(cs.begin(), cs.end(), rng);
  auto observed = static_cast<std::size_t>(std::lround(cfg.evidence_fraction * static_cast<double>(cs.size())));
  std::bernoulli_distribution coin(0.5);
  for (std::size_t k = 0; k < observed; ++k) g.evidence.emplace(cs[k], Value::boolean(coin(rng)));
  return g;
}

InstantiatedModel instantiate(const GeneratedModel& g) {
  InstantiatedModel out{g.id, expand(g.program).with_evidence(g.evidence), {}, {}};
  for (const auto& p : g.potentials) {
    VarId a = out.model.at(p.a), b = out.model.at(p.b);
    out.extra.emplace_back(std::vector<VarId>{a, b}, std::vector<std::size_t>{out.model.card(a), out.model.card(b)},
                           p.table);
  }
  for (const auto& q : g.queries) out.queries.push_back(out.model.at(q));
  return out;
}

std::vector<Value> sample_forward(const ExpandedModel& model, std::mt19937_64& rng) {
  std::vector<Value> draw(model.size());
  for (VarId v : model.all_vars()) {
    const auto& def = model.var(v).def;
    if (const auto* e = std::get_if<ExpandedValue>(&def)) {
      draw[v.index] = e->value;
    } else if (const auto* p = std::get_if<ExpandedPrimitive>(&def)) {
      auto dist = distribution_of(p->dist);
      std::vector<double> w;
      for (const auto& [value, prob] : dist) w.push_back(prob);
      draw[v.index] = dist[std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng)].first;
    } else if (const auto* a = std::get_if<ExpandedApply>(&def)) {
      std::vector<Value> args;
      for (VarId x : a->args) args.push_back(draw[x.index]);
      draw[v.index] = eval_fn(a->fn, args);
    } else {
      const auto& c = std::get<ExpandedChain>(def);
      const Value& pv = draw[c.parent.index];
      for (const auto& [value, sid] : c.branches)
        if (value == pv) draw[v.index] = draw[model.scope(sid).outcome->index];
    }
  }
  return draw;
}

}  // namespace sfi

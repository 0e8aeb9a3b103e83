#include "sfi/program.h"

#include <algorithm>
#include <cmath>
#include <map>

namespace sfi {

namespace {

constexpr double kProbTolerance = 1e-12;

void validate_scope(const Program& p, std::set<std::string> available, const std::string& where) {
  if (p.defs().empty()) throw ModelError(ModelError::Kind::EmptyProgram, where + "program has no definitions");
  available.insert(p.free().begin(), p.free().end());
  std::set<std::string> defined;
  for (const auto& def : p.defs()) {
    if (defined.count(def.name) || p.free().count(def.name))
      throw ModelError(ModelError::Kind::DuplicateName, where + "duplicate definition of '" + def.name + "'");
    for (const auto& ref : referenced_names(def.expr)) {
      if (!available.count(ref))
        throw ModelError(ModelError::Kind::UnknownVariable,
                         where + "'" + def.name + "' references unavailable variable '" + ref + "'");
    }
    if (const auto* prim = std::get_if<PrimitiveExpr>(&def.expr)) validate_distribution(prim->dist);
    if (const auto* app = std::get_if<ApplyExpr>(&def.expr)) {
      if (!app->fn.body)
        throw ModelError(ModelError::Kind::InvalidDistribution, where + "'" + def.name + "' has an empty function");
      if (app->fn.params.size() != app->args.size())
        throw ModelError(ModelError::Kind::InvalidDistribution,
                         where + "'" + def.name + "' applies a function of arity " +
                             std::to_string(app->fn.params.size()) + " to " + std::to_string(app->args.size()) +
                             " arguments");
    }
    if (const auto* ch = std::get_if<ChainExpr>(&def.expr)) {
      if (ch->branches.empty() && !ch->generator)
        throw ModelError(ModelError::Kind::MissingBranch, where + "chain '" + def.name + "' has no branches");
      for (std::size_t i = 0; i < ch->branches.size(); ++i) {
        const auto& [v, branch] = ch->branches[i];
        if (i > 0 && !(ch->branches[i - 1].first < v))
          throw ModelError(ModelError::Kind::DuplicateName,
                           where + "chain '" + def.name + "' branches are not strictly ordered by value");
        std::string inner = where + def.name + "[" + v.literal() + "]: ";
        validate_scope(*branch, available, inner);
        if (branch->defs().back().name != "outcome")
          throw ModelError(ModelError::Kind::MissingOutcome, inner + "last definition must be 'outcome'");
      }
    }
    defined.insert(def.name);
    available.insert(def.name);
  }
}

}  // namespace

std::vector<std::pair<Value, double>> distribution_of(const PrimitiveDist& d) {
  std::vector<std::pair<Value, double>> out;
  if (const auto* f = std::get_if<Flip>(&d)) {
    out = {{Value::boolean(false), 1.0 - f->p}, {Value::boolean(true), f->p}};
  } else if (const auto* c = std::get_if<Categorical>(&d)) {
    std::map<Value, double> merged;
    for (const auto& [v, p] : c->entries) merged[v] += p;
    out.assign(merged.begin(), merged.end());
  } else {
    const auto& u = std::get<UniformDiscretized>(d);
    Rational width = u.hi - u.lo;
    for (int i = 0; i < u.bins; ++i) {
      Rational mid = u.lo + width * Rational(2 * i + 1, 2 * static_cast<std::int64_t>(u.bins));
      out.emplace_back(Value::rational(mid), 1.0 / u.bins);
    }
  }
  return out;
}

void validate_distribution(const PrimitiveDist& d) {
  auto bad = [](const std::string& m) { throw ModelError(ModelError::Kind::InvalidDistribution, m); };
  auto check_prob = [&](double p) {
    if (!(p >= 0.0 && p <= 1.0)) bad("probability out of [0,1]");
  };
  if (const auto* f = std::get_if<Flip>(&d)) {
    check_prob(f->p);
  } else if (const auto* c = std::get_if<Categorical>(&d)) {
    if (c->entries.empty()) bad("categorical with no entries");
    double sum = 0.0;
    for (const auto& [v, p] : c->entries) {
      check_prob(p);
      sum += p;
    }
    if (std::abs(sum - 1.0) > kProbTolerance) bad("categorical probabilities do not sum to 1");
  } else {
    const auto& u = std::get<UniformDiscretized>(d);
    if (u.bins < 1) bad("uniform needs at least one bin");
    if (!(u.lo < u.hi)) bad("uniform needs lo < hi");
  }
}

const Program* ChainExpr::find_branch(const Value& v) const {
  auto it = std::lower_bound(branches.begin(), branches.end(), v,
                             [](const auto& entry, const Value& x) { return entry.first < x; });
  if (it != branches.end() && it->first == v) return it->second.get();
  return nullptr;
}

Program::Program(std::set<std::string> free, std::vector<Definition> defs)
    : free_(std::move(free)), defs_(std::move(defs)) {}

void Program::validate() const { validate_scope(*this, {}, ""); }

const Definition* Program::find(const std::string& name) const {
  for (const auto& d : defs_)
    if (d.name == name) return &d;
  return nullptr;
}

bool operator==(const Expression& a, const Expression& b) {
  if (a.index() != b.index()) return false;
  if (const auto* x = std::get_if<ValueExpr>(&a)) return x->value == std::get<ValueExpr>(b).value;
  if (const auto* x = std::get_if<PrimitiveExpr>(&a)) return x->dist == std::get<PrimitiveExpr>(b).dist;
  if (const auto* x = std::get_if<ApplyExpr>(&a)) {
    const auto& y = std::get<ApplyExpr>(b);
    return x->args == y.args && x->fn == y.fn;
  }
  const auto& x = std::get<ChainExpr>(a);
  const auto& y = std::get<ChainExpr>(b);
  if (x.parent != y.parent || x.branches.size() != y.branches.size() || x.generator != y.generator) return false;
  for (std::size_t i = 0; i < x.branches.size(); ++i) {
    if (!(x.branches[i].first == y.branches[i].first)) return false;
    if (!(*x.branches[i].second == *y.branches[i].second)) return false;
  }
  return true;
}

bool operator==(const Program& a, const Program& b) {
  if (a.free() != b.free() || a.defs().size() != b.defs().size()) return false;
  for (std::size_t i = 0; i < a.defs().size(); ++i) {
    if (a.defs()[i].name != b.defs()[i].name) return false;
    if (!(a.defs()[i].expr == b.defs()[i].expr)) return false;
  }
  return true;
}

std::set<std::string> available_set(const Program& program, const std::string& name) {
  std::set<std::string> out = program.free();
  for (const auto& def : program.defs()) {
    if (def.name == name) return out;
    out.insert(def.name);
  }
  throw ModelError(ModelError::Kind::UnknownVariable, "'" + name + "' is not defined");
}

std::vector<std::string> referenced_names(const Expression& e) {
  if (const auto* a = std::get_if<ApplyExpr>(&e)) return a->args;
  if (const auto* c = std::get_if<ChainExpr>(&e)) return {c->parent};
  return {};
}

Expression value(Value v) { return ValueExpr{std::move(v)}; }
Expression flip(double p) { return PrimitiveExpr{Flip{p}}; }
Expression categorical(std::vector<std::pair<Value, double>> entries) {
  return PrimitiveExpr{Categorical{std::move(entries)}};
}
Expression uniform(Rational lo, Rational hi, int bins) { return PrimitiveExpr{UniformDiscretized{lo, hi, bins}}; }
Expression apply(std::vector<std::string> args, Lambda fn) { return ApplyExpr{std::move(args), std::move(fn)}; }

Expression chain(std::string parent, std::vector<std::pair<Value, Program>> branches) {
  ChainExpr c;
  c.parent = std::move(parent);
  std::sort(branches.begin(), branches.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  for (auto& [v, p] : branches) c.branches.emplace_back(v, std::make_shared<const Program>(std::move(p)));
  return c;
}

Expression chain(std::string parent, ChainExpr::Generator generator) {
  ChainExpr c;
  c.parent = std::move(parent);
  c.generator = std::make_shared<const ChainExpr::Generator>(std::move(generator));
  return c;
}

}  // namespace sfi

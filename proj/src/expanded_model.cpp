#include "sfi/expanded_model.h"

#include <algorithm>
#include <deque>

namespace sfi {

std::optional<std::size_t> ExpandedModel::value_index(VarId id, const Value& v) const {
  const auto& s = support(id);
  auto it = std::lower_bound(s.begin(), s.end(), v);
  if (it == s.end() || !(*it == v)) return std::nullopt;
  return static_cast<std::size_t>(it - s.begin());
}

std::optional<VarId> ExpandedModel::find(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

VarId ExpandedModel::at(const std::string& name) const {
  auto id = find(name);
  if (!id) throw ModelError(ModelError::Kind::UnknownVariable, "unknown variable '" + name + "'");
  return *id;
}

std::vector<VarId> ExpandedModel::all_vars() const {
  std::vector<VarId> out(vars_.size());
  for (std::uint32_t i = 0; i < out.size(); ++i) out[i] = VarId{i};
  return out;
}

ExpandedModel ExpandedModel::with_evidence(const std::map<std::string, Value>& evidence) const {
  std::map<VarId, Value> by_id;
  for (const auto& [name, v] : evidence) by_id[at(name)] = v;
  return with_evidence(by_id);
}

ExpandedModel ExpandedModel::with_evidence(const std::map<VarId, Value>& evidence) const {
  ExpandedModel out = *this;
  for (const auto& [id, v] : evidence) {
    if (id.index >= vars_.size())
      throw ModelError(ModelError::Kind::UnknownVariable, "evidence on unknown variable");
    if (!value_index(id, v))
      throw ModelError(ModelError::Kind::ValueNotInSupport,
                       "evidence " + name(id) + "=" + v.literal() + " is outside the variable's support");
  }
  out.evidence_ = evidence;
  return out;
}

std::vector<VarId> ExpandedModel::references(VarId v) const {
  const auto& def = var(v).def;
  if (const auto* a = std::get_if<ExpandedApply>(&def)) return a->args;
  if (const auto* c = std::get_if<ExpandedChain>(&def)) {
    std::vector<VarId> out{c->parent};
    for (const auto& [value, scope] : c->branches) out.push_back(*this->scope(scope).outcome);
    return out;
  }
  return {};
}

class Expander {
 public:
  explicit Expander(const ExpandOptions& options) : options_(options) {}

  ExpandedModel run(const Program& program) {
    expand_scope(program, std::nullopt, std::nullopt, Value(), {}, "");
    for (auto& scope : model_.scopes_) {
      for (std::uint32_t i = scope.first.index; i < scope.last.index; ++i) {
        for (VarId r : model_.references(VarId{i}))
          if (!scope.contains(r)) scope.externals.insert(r);
      }
    }
    return std::move(model_);
  }

 private:
  using Env = std::unordered_map<std::string, VarId>;

  [[noreturn]] void unavailable(const std::string& ref, const std::string& where) {
    if (std::find(chain_names_.begin(), chain_names_.end(), ref) != chain_names_.end())
      throw ModelError(ModelError::Kind::RecursionDetected,
                       where + " refers to enclosing chain '" + ref + "'; expansion would not terminate");
    throw ModelError(ModelError::Kind::UnknownVariable, where + " references unavailable variable '" + ref + "'");
  }

  VarId resolve(const Env& env, const std::string& ref, const std::string& where) {
    auto it = env.find(ref);
    if (it == env.end()) unavailable(ref, where);
    return it->second;
  }

  VarId add_var(std::string name, ScopeId scope, ExpandedDef def, std::vector<Value> support) {
    VarId id{static_cast<std::uint32_t>(model_.vars_.size())};
    if (model_.by_name_.count(name))
      throw ModelError(ModelError::Kind::DuplicateName, "expanded variable name '" + name + "' is not unique");
    model_.by_name_[name] = id;
    model_.vars_.push_back(VariableInfo{std::move(name), scope, std::move(def), std::move(support)});
    return id;
  }

  std::vector<Value> apply_support(const std::vector<VarId>& args, const Lambda& fn, const std::string& where) {
    // a repeated argument is one variable, so enumerate distinct ones only
    std::vector<VarId> distinct = args;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<std::size_t> slot(args.size());
    for (std::size_t i = 0; i < args.size(); ++i)
      slot[i] = static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), args[i]) - distinct.begin());
    std::size_t combos = 1;
    for (VarId a : distinct) {
      combos *= model_.card(a);
      if (combos > options_.max_support_product)
        throw ModelError(ModelError::Kind::NonFiniteSupport, where + ": argument support product is too large");
    }
    std::set<Value> image;
    std::vector<std::size_t> idx(distinct.size(), 0);
    std::vector<Value> vals(args.size());
    for (std::size_t n = 0; n < combos; ++n) {
      for (std::size_t k = 0; k < args.size(); ++k) vals[k] = model_.support(args[k])[idx[slot[k]]];
      try {
        image.insert(eval_fn(fn, vals));
      } catch (const EvalError& e) {
        throw ModelError(ModelError::Kind::EvalFailure, where + ": " + e.what());
      }
      for (std::size_t k = distinct.size(); k-- > 0;) {
        if (++idx[k] < model_.card(distinct[k])) break;
        idx[k] = 0;
      }
    }
    return {image.begin(), image.end()};
  }

  ScopeId expand_scope(const Program& program, std::optional<ScopeId> parent, std::optional<VarId> chain_var,
                       Value parent_value, Env env, const std::string& prefix) {
    if (program.defs().empty())
      throw ModelError(ModelError::Kind::EmptyProgram, "program '" + prefix + "' has no definitions");
    ScopeId sid{static_cast<std::uint32_t>(model_.scopes_.size())};
    {
      ScopeInfo info;
      info.parent = parent;
      info.chain_var = chain_var;
      info.parent_value = std::move(parent_value);
      info.first = VarId{static_cast<std::uint32_t>(model_.vars_.size())};
      model_.scopes_.push_back(std::move(info));
    }
    std::set<std::string> local;
    for (const auto& def : program.defs()) {
      std::string name = prefix + def.name;
      if (!local.insert(def.name).second)
        throw ModelError(ModelError::Kind::DuplicateName, "duplicate definition of '" + name + "'");
      VarId id;
      if (const auto* v = std::get_if<ValueExpr>(&def.expr)) {
        id = add_var(name, sid, ExpandedValue{v->value}, {v->value});
      } else if (const auto* p = std::get_if<PrimitiveExpr>(&def.expr)) {
        validate_distribution(p->dist);
        std::vector<Value> support;
        for (const auto& [value, prob] : distribution_of(p->dist))
          if (prob > 0.0) support.push_back(value);
        id = add_var(name, sid, ExpandedPrimitive{p->dist}, std::move(support));
      } else if (const auto* a = std::get_if<ApplyExpr>(&def.expr)) {
        std::vector<VarId> args;
        for (const auto& ref : a->args) args.push_back(resolve(env, ref, "'" + name + "'"));
        if (a->fn.params.size() != args.size())
          throw ModelError(ModelError::Kind::EvalFailure, "'" + name + "': function arity does not match arguments");
        auto support = apply_support(args, a->fn, "'" + name + "'");
        id = add_var(name, sid, ExpandedApply{args, a->fn}, std::move(support));
      } else {
        id = expand_chain(std::get<ChainExpr>(def.expr), def.name, name, sid, env);
      }
      env[def.name] = id;
      model_.scopes_[sid.index].own_vars.push_back(id);
    }
    model_.scopes_[sid.index].last = VarId{static_cast<std::uint32_t>(model_.vars_.size())};
    return sid;
  }

  VarId expand_chain(const ChainExpr& chain, const std::string& local_name, const std::string& name, ScopeId sid,
                     const Env& env) {
    VarId parent = resolve(env, chain.parent, "'" + name + "'");
    const void* identity = chain.generator ? static_cast<const void*>(chain.generator.get())
                                           : static_cast<const void*>(&chain);
    if (std::find(active_.begin(), active_.end(), identity) != active_.end() ||
        active_.size() >= options_.max_depth)
      throw ModelError(ModelError::Kind::RecursionDetected, "'" + name + "': chain expansion revisits itself");
    active_.push_back(identity);
    chain_names_.push_back(local_name);

    const std::vector<Value> parent_support = model_.support(parent);
    std::vector<std::string> labels;
    for (const auto& v : parent_support) labels.push_back(v.label());
    if (std::set<std::string>(labels.begin(), labels.end()).size() != labels.size())
      for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = parent_support[i].literal();

    std::vector<std::pair<Value, ScopeId>> branches;
    std::vector<std::pair<Value, VarId>> outcomes;
    std::set<Value> support;
    for (std::size_t i = 0; i < parent_support.size(); ++i) {
      const Value& v = parent_support[i];
      const Program* branch = chain.find_branch(v);
      std::shared_ptr<const Program> generated;
      if (!branch && chain.generator) {
        auto key = std::make_pair(identity, v);
        auto it = memo_.find(key);
        if (it == memo_.end()) it = memo_.emplace(key, std::make_shared<const Program>((*chain.generator)(v))).first;
        generated = it->second;
        branch = generated.get();
      }
      if (!branch)
        throw ModelError(ModelError::Kind::MissingBranch,
                         "'" + name + "' has no branch for parent value " + v.literal());
      if (branch->defs().empty() || branch->defs().back().name != "outcome")
        throw ModelError(ModelError::Kind::MissingOutcome,
                         "'" + name + "' branch " + v.literal() + " does not end with 'outcome'");
      ScopeId child = expand_scope(*branch, sid, std::nullopt, v, env, name + "." + labels[i] + ".");
      auto& child_info = model_.scopes_[child.index];
      child_info.outcome = child_info.own_vars.back();
      model_.scopes_[sid.index].children.push_back(child);
      branches.emplace_back(v, child);
      VarId out = *child_info.outcome;
      outcomes.emplace_back(v, out);
      for (const auto& s : model_.support(out)) support.insert(s);
    }
    active_.pop_back();
    chain_names_.pop_back();
    VarId id = add_var(name, sid, ExpandedChain{parent, branches}, {support.begin(), support.end()});
    for (auto& [v, child] : branches) model_.scopes_[child.index].chain_var = id;
    model_.chains_.push_back(ChainInstance{id, parent, outcomes});
    return id;
  }

  ExpandOptions options_;
  ExpandedModel model_;
  std::vector<const void*> active_;
  std::vector<std::string> chain_names_;
  std::map<std::pair<const void*, Value>, std::shared_ptr<const Program>> memo_;
};

ExpandedModel expand(const Program& program, const ExpandOptions& options) {
  Expander expander(options);
  return expander.run(program);
}

VarSet uses_set(const ExpandedModel& model, VarId r) {
  if (r.index >= model.size()) throw ModelError(ModelError::Kind::UnknownVariable, "unknown variable id");
  VarSet seen{r};
  std::deque<VarId> queue{r};
  auto visit = [&](VarId x) {
    if (seen.insert(x).second) queue.push_back(x);
  };
  while (!queue.empty()) {
    VarId x = queue.front();
    queue.pop_front();
    const auto& def = model.var(x).def;
    if (const auto* a = std::get_if<ExpandedApply>(&def)) {
      for (VarId y : a->args) visit(y);
    } else if (const auto* c = std::get_if<ExpandedChain>(&def)) {
      visit(c->parent);
      for (const auto& [v, sid] : c->branches) {
        const auto& s = model.scope(sid);
        for (std::uint32_t i = s.first.index; i < s.last.index; ++i) visit(VarId{i});
      }
    }
  }
  return seen;
}

VarSet external_set(const ExpandedModel& model, VarId r) {
  VarSet used = uses_set(model, r);
  std::vector<char> reached(model.size(), 0);
  std::deque<VarId> queue;
  for (VarId y : model.all_vars()) {
    if (used.count(y)) continue;
    reached[y.index] = 1;
    queue.push_back(y);
  }
  while (!queue.empty()) {
    VarId x = queue.front();
    queue.pop_front();
    if (x == r) continue;
    for (VarId y : model.references(x)) {
      if (reached[y.index]) continue;
      reached[y.index] = 1;
      queue.push_back(y);
    }
  }
  VarSet out;
  for (VarId x : used)
    if (x != r && reached[x.index]) out.insert(x);
  return out;
}

}  // namespace sfi

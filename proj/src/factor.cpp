#include "sfi/factor.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace sfi {

namespace {

std::size_t cells(const std::vector<std::size_t>& cards) {
  std::size_t n = 1;
  for (auto c : cards) n *= c;
  return n;
}

std::vector<std::size_t> strides_of(const std::vector<std::size_t>& cards) {
  std::vector<std::size_t> s(cards.size(), 1);
  for (std::size_t i = cards.size(); i-- > 1;) s[i - 1] = s[i] * cards[i];
  return s;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

}  // namespace

Factor::Factor() : table_{1.0} {}

Factor::Factor(std::vector<VarId> vars, std::vector<std::size_t> cards, std::vector<double> table) {
  if (vars.size() != cards.size())
    throw InferenceError(InferenceError::Kind::SupportMismatch, "factor vars and cards differ in length");
  if (table.size() != cells(cards))
    throw InferenceError(InferenceError::Kind::SupportMismatch, "factor table length does not match cards");
  for (double x : table)
    if (!(x >= 0.0) || !std::isfinite(x))
      throw InferenceError(InferenceError::Kind::SupportMismatch, "factor entries must be finite and non-negative");
  std::vector<std::size_t> perm(vars.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return vars[a] < vars[b]; });
  for (std::size_t i = 1; i < perm.size(); ++i)
    if (vars[perm[i - 1]] == vars[perm[i]])
      throw InferenceError(InferenceError::Kind::SupportMismatch, "factor variables must be distinct");
  bool sorted = std::is_sorted(perm.begin(), perm.end());
  for (std::size_t i : perm) {
    vars_.push_back(vars[i]);
    cards_.push_back(cards[i]);
  }
  if (sorted) {
    table_ = std::move(table);
    return;
  }
  auto old_strides = strides_of(cards);
  table_.assign(table.size(), 0.0);
  std::vector<std::size_t> idx(vars_.size(), 0);
  for (std::size_t n = 0; n < table_.size(); ++n) {
    std::size_t src = 0;
    for (std::size_t k = 0; k < idx.size(); ++k) src += idx[k] * old_strides[perm[k]];
    table_[n] = table[src];
    for (std::size_t k = idx.size(); k-- > 0;) {
      if (++idx[k] < cards_[k]) break;
      idx[k] = 0;
    }
  }
}

Factor Factor::constant(std::vector<VarId> vars, std::vector<std::size_t> cards, double value) {
  std::size_t n = cells(cards);
  return Factor(std::move(vars), std::move(cards), std::vector<double>(n, value));
}

bool Factor::has(VarId v) const { return std::binary_search(vars_.begin(), vars_.end(), v); }

std::size_t Factor::position(VarId v) const {
  auto it = std::lower_bound(vars_.begin(), vars_.end(), v);
  if (it == vars_.end() || *it != v)
    throw InferenceError(InferenceError::Kind::UnknownVariable,
                         "variable " + std::to_string(v.index) + " is not in the factor");
  return static_cast<std::size_t>(it - vars_.begin());
}

double Factor::at(const std::vector<std::size_t>& assignment) const {
  std::size_t index = 0;
  for (std::size_t k = 0; k < cards_.size(); ++k) index = index * cards_[k] + assignment.at(k);
  return table_.at(index);
}

double Factor::value(std::size_t index) const { return table_.at(index) * std::exp(log_scale_); }

Factor Factor::rescaled() const {
  double m = *std::max_element(table_.begin(), table_.end());
  if (m <= 0.0 || m == 1.0) return *this;
  Factor out = *this;
  for (double& x : out.table_) x /= m;
  out.log_scale_ += std::log(m);
  return out;
}

std::string Factor::dump(const ExpandedModel* model) const {
  std::ostringstream os;
  os << "vars:";
  for (std::size_t k = 0; k < vars_.size(); ++k) {
    os << ' ' << (model ? model->name(vars_[k]) : "v" + std::to_string(vars_[k].index)) << '(' << cards_[k] << ')';
  }
  os << '\n';
  std::vector<std::size_t> idx(vars_.size(), 0);
  for (std::size_t n = 0; n < table_.size(); ++n) {
    os << n << " |";
    for (std::size_t k = 0; k < idx.size(); ++k)
      os << ' ' << (model ? model->support(vars_[k])[idx[k]].literal() : std::to_string(idx[k]));
    os << " | " << fmt(value(n)) << '\n';
    for (std::size_t k = idx.size(); k-- > 0;) {
      if (++idx[k] < cards_[k]) break;
      idx[k] = 0;
    }
  }
  return os.str();
}

Factor product(const Factor& f, const Factor& g) {
  Factor out;
  out.vars_.clear();
  std::size_t i = 0, j = 0;
  while (i < f.vars_.size() || j < g.vars_.size()) {
    if (j == g.vars_.size() || (i < f.vars_.size() && f.vars_[i] < g.vars_[j])) {
      out.vars_.push_back(f.vars_[i]);
      out.cards_.push_back(f.cards_[i++]);
    } else if (i == f.vars_.size() || g.vars_[j] < f.vars_[i]) {
      out.vars_.push_back(g.vars_[j]);
      out.cards_.push_back(g.cards_[j++]);
    } else {
      if (f.cards_[i] != g.cards_[j])
        throw InferenceError(InferenceError::Kind::SupportMismatch,
                             "variable " + std::to_string(f.vars_[i].index) + " has different cardinalities");
      out.vars_.push_back(f.vars_[i]);
      out.cards_.push_back(f.cards_[i]);
      ++i;
      ++j;
    }
  }
  std::size_t n = cells(out.cards_);
  std::size_t d = out.vars_.size();
  // stride of each output variable inside f and g (0 when absent)
  std::vector<std::size_t> sf(d, 0), sg(d, 0);
  auto fs = strides_of(f.cards_), gs = strides_of(g.cards_);
  for (std::size_t k = 0, a = 0, b = 0; k < d; ++k) {
    if (a < f.vars_.size() && f.vars_[a] == out.vars_[k]) sf[k] = fs[a++];
    if (b < g.vars_.size() && g.vars_[b] == out.vars_[k]) sg[k] = gs[b++];
  }
  out.table_.assign(n, 0.0);
  std::vector<std::size_t> idx(d, 0);
  std::size_t fi = 0, gi = 0;
  for (std::size_t t = 0; t < n; ++t) {
    out.table_[t] = f.table_[fi] * g.table_[gi];
    for (std::size_t k = d; k-- > 0;) {
      if (++idx[k] < out.cards_[k]) {
        fi += sf[k];
        gi += sg[k];
        break;
      }
      fi -= sf[k] * (out.cards_[k] - 1);
      gi -= sg[k] * (out.cards_[k] - 1);
      idx[k] = 0;
    }
  }
  out.log_scale_ = f.log_scale_ + g.log_scale_;
  return out;
}

Factor product(const FactorSet& fs) {
  Factor out;
  for (const auto& f : fs) out = product(out, f);
  return out;
}

Factor sum_out(const Factor& f, VarId x) {
  std::size_t p = f.position(x);
  std::size_t k = f.cards_[p];
  std::size_t inner = 1;
  for (std::size_t i = p + 1; i < f.cards_.size(); ++i) inner *= f.cards_[i];
  std::size_t outer = f.table_.size() / (k * inner);
  Factor out;
  out.vars_ = f.vars_;
  out.cards_ = f.cards_;
  out.vars_.erase(out.vars_.begin() + static_cast<std::ptrdiff_t>(p));
  out.cards_.erase(out.cards_.begin() + static_cast<std::ptrdiff_t>(p));
  out.table_.assign(outer * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t j = 0; j < k; ++j) {
      const double* src = &f.table_[(o * k + j) * inner];
      double* dst = &out.table_[o * inner];
      for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
    }
  out.log_scale_ = f.log_scale_;
  return out;
}

Factor marginalize_to(const Factor& f, const VarSet& keep) {
  Factor out = f;
  for (VarId v : f.vars())
    if (!keep.count(v)) out = sum_out(out, v);
  return out;
}

Factor normalize(const Factor& f) {
  double total = 0.0;
  for (double x : f.table_) total += x;
  if (!(total > 0.0)) throw InferenceError(InferenceError::Kind::ZeroMass, "factor has zero total mass");
  Factor out = f;
  for (double& x : out.table_) x /= total;
  out.log_scale_ = 0.0;
  return out;
}

double max_abs_diff(const Factor& a, const Factor& b) {
  if (a.vars() != b.vars() || a.cards() != b.cards())
    throw InferenceError(InferenceError::Kind::ScopeViolation, "factors have different scopes");
  Factor na = normalize(a), nb = normalize(b);
  double m = 0.0;
  for (std::size_t i = 0; i < na.size(); ++i) m = std::max(m, std::abs(na.table()[i] - nb.table()[i]));
  return m;
}

VarSet scope_of(const FactorSet& fs) {
  VarSet out;
  for (const auto& f : fs) out.insert(f.vars().begin(), f.vars().end());
  return out;
}

std::map<VarId, std::size_t> cards_of(const FactorSet& fs) {
  std::map<VarId, std::size_t> out;
  for (const auto& f : fs)
    for (std::size_t k = 0; k < f.vars().size(); ++k) {
      auto [it, fresh] = out.emplace(f.vars()[k], f.cards()[k]);
      if (!fresh && it->second != f.cards()[k])
        throw InferenceError(InferenceError::Kind::SupportMismatch,
                             "variable " + std::to_string(f.vars()[k].index) + " has different cardinalities");
    }
  return out;
}

Factor indicator(VarId x, std::size_t card, std::size_t index) {
  std::vector<double> t(card, 0.0);
  t.at(index) = 1.0;
  return Factor({x}, {card}, std::move(t));
}

FactorSet condition(const ExpandedModel& model, FactorSet fs, const std::map<VarId, Value>& evidence) {
  for (const auto& [x, v] : evidence) {
    if (x.index >= model.size())
      throw InferenceError(InferenceError::Kind::UnknownVariable, "evidence on unknown variable");
    auto idx = model.value_index(x, v);
    if (!idx)
      throw InferenceError(InferenceError::Kind::ValueNotInSupport,
                           "evidence " + model.name(x) + "=" + v.literal() + " is outside the variable's support");
    fs.push_back(indicator(x, model.card(x), *idx));
  }
  return fs;
}

}  // namespace sfi

#include "sfi/analysis.h"

#include <algorithm>
#include <iterator>
#include <map>
#include <numeric>
#include <optional>

namespace sfi {

namespace {
constexpr double kMaxJoinCells = 4096;
}  // namespace

FactorSet simplify(const FactorSet& fs, const VarSet& keep) {
  std::vector<std::optional<Factor>> pool(fs.begin(), fs.end());

  std::map<VarId, std::vector<std::size_t>> users;
  for (std::size_t i = 0; i < fs.size(); ++i)
    for (VarId v : fs[i].vars()) users[v].push_back(i);
  std::vector<VarId> candidates;
  for (const auto& [v, list] : users) {
    if (keep.count(v)) continue;
    std::size_t wide = 0;
    for (std::size_t i : list)
      if (fs[i].vars().size() > 1) ++wide;
    if (wide <= 1) candidates.push_back(v);
  }

  for (VarId x : candidates) {
    std::vector<std::size_t> here;
    std::size_t wide = 0;
    std::size_t target = SIZE_MAX;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (!pool[i] || !pool[i]->has(x)) continue;
      here.push_back(i);
      if (pool[i]->vars().size() > 1) {
        ++wide;
        target = i;
      }
    }
    if (wide > 1 || here.empty()) continue;
    Factor merged;
    for (std::size_t i : here) {
      merged = product(merged, *pool[i]);
      pool[i].reset();
    }
    merged = sum_out(merged, x);
    if (target != SIZE_MAX) pool[target] = merged.rescaled();
  }

  // fold each factor into the first other factor whose scope contains it;
  // when none is left, join two factors sharing two or more variables if the
  // result stays small, which removes short cycles such as the per-value
  // factors of a chain
  auto cells = [](const Factor& a, const Factor& b) {
    double n = 1;
    for (const Factor* f : {&a, &b})
      for (std::size_t i = 0; i < f->vars().size(); ++i)
        if (f == &a || !a.has(f->vars()[i])) n *= static_cast<double>(f->cards()[i]);
    return n;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < pool.size() && !changed; ++i) {
      if (!pool[i]) continue;
      for (std::size_t j = 0; j < pool.size(); ++j) {
        if (i == j || !pool[j]) continue;
        const auto& a = pool[i]->vars();
        const auto& b = pool[j]->vars();
        if (a.size() > b.size() || !std::includes(b.begin(), b.end(), a.begin(), a.end())) continue;
        pool[j] = product(*pool[j], *pool[i]).rescaled();
        pool[i].reset();
        changed = true;
        break;
      }
    }
    for (std::size_t i = 0; i < pool.size() && !changed; ++i) {
      if (!pool[i]) continue;
      for (std::size_t j = i + 1; j < pool.size(); ++j) {
        if (!pool[j]) continue;
        std::vector<VarId> shared;
        std::set_intersection(pool[i]->vars().begin(), pool[i]->vars().end(), pool[j]->vars().begin(),
                              pool[j]->vars().end(), std::back_inserter(shared));
        if (shared.size() < 2 || cells(*pool[i], *pool[j]) > kMaxJoinCells) continue;
        pool[i] = product(*pool[i], *pool[j]).rescaled();
        pool[j].reset();
        changed = true;
        break;
      }
    }
  }

  FactorSet out;
  for (auto& f : pool)
    if (f && !f->vars().empty()) out.push_back(std::move(*f));
  // a kept variable that lost all its factors still needs a scope entry
  VarSet present = scope_of(out);
  auto cards = cards_of(fs);
  for (VarId k : keep)
    if (!present.count(k) && cards.count(k)) out.push_back(Factor::constant({k}, {cards[k]}, 1.0));
  return out;
}

bool has_degenerate_column(const Factor& f, VarId x) {
  std::size_t p = f.position(x);
  std::size_t k = f.cards()[p];
  if (k < 2) return false;
  std::size_t inner = 1;
  for (std::size_t i = p + 1; i < f.cards().size(); ++i) inner *= f.cards()[i];
  std::size_t outer = f.size() / (k * inner);
  const auto& t = f.table();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < inner; ++i) {
      std::size_t nonzero = 0;
      for (std::size_t j = 0; j < k && nonzero < 2; ++j)
        if (t[(o * k + j) * inner + i] > 0.0) ++nonzero;
      if (nonzero == 1) return true;
    }
  return false;
}

std::vector<std::vector<VarId>> blocks(const FactorSet& fs) {
  VarSet scope = scope_of(fs);
  std::vector<VarId> vars(scope.begin(), scope.end());
  auto index = [&](VarId v) {
    return static_cast<std::size_t>(std::lower_bound(vars.begin(), vars.end(), v) - vars.begin());
  };
  std::vector<std::size_t> parent(vars.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (const auto& f : fs) {
    if (f.vars().size() < 2) continue;
    bool degenerate = false;
    for (VarId x : f.vars())
      if (has_degenerate_column(f, x)) {
        degenerate = true;
        break;
      }
    if (!degenerate) continue;
    std::size_t root = find(index(f.vars()[0]));
    for (VarId x : f.vars()) {
      std::size_t r = find(index(x));
      if (r != root) parent[std::max(r, root)] = std::min(r, root);
      root = find(root);
    }
  }
  std::map<std::size_t, std::vector<VarId>> groups;
  for (std::size_t i = 0; i < vars.size(); ++i) groups[find(i)].push_back(vars[i]);
  std::vector<std::vector<VarId>> out;
  for (auto& [r, g] : groups) out.push_back(std::move(g));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return out;
}

double determinism_fraction(const FactorSet& fs) {
  auto bs = blocks(fs);
  std::size_t total = 0, det = 0;
  for (const auto& b : bs) {
    total += b.size();
    if (b.size() > 1) det += b.size();
  }
  return total == 0 ? 0.0 : static_cast<double>(det) / static_cast<double>(total);
}

}  // namespace sfi

#include <doctest.h>

#include <cmath>
#include <random>

#include "oracle.h"
#include "random_models.h"
#include "sfi/factor.h"
#include "sfi/lower.h"
#include "sfi/parser.h"

using namespace sfi;

namespace {

ExpandedModel fig1() { return expand(parse_file(SFI_TEST_DATA "/fig1.sppl")); }

Factor random_factor(std::mt19937_64& rng, const std::vector<VarId>& pool, const std::map<VarId, std::size_t>& cards) {
  std::vector<VarId> vars;
  for (VarId v : pool)
    if (rng() % 2) vars.push_back(v);
  std::vector<std::size_t> cs;
  std::size_t n = 1;
  for (VarId v : vars) {
    cs.push_back(cards.at(v));
    n *= cards.at(v);
  }
  std::vector<double> t(n);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& x : t) x = u(rng);
  return Factor(vars, cs, t);
}

void check_close(const Factor& a, const Factor& b, double tol) {
  REQUIRE(a.vars() == b.vars());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a.value(i) - b.value(i)) <= tol);
}

// Sums every variable but q out of the product, one variable at a time in id
// order, so models with many variables stay small.
std::vector<double> brute_marginal(FactorSet fs, VarId q) {
  for (VarId v : scope_of(fs)) {
    if (v == q) continue;
    FactorSet rest;
    Factor joined;
    for (auto& f : fs) {
      if (f.has(v))
        joined = product(joined, f);
      else
        rest.push_back(std::move(f));
    }
    rest.push_back(sum_out(joined, v));
    fs = std::move(rest);
  }
  return normalize(marginalize_to(product(fs), {q})).table();
}

}  // namespace

TEST_CASE("factor construction keeps a canonical variable order") {
  // table laid out as (b, a) with a fastest
  Factor f({VarId{5}, VarId{2}}, {2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(f.vars() == std::vector<VarId>{VarId{2}, VarId{5}});
  CHECK(f.cards() == std::vector<std::size_t>{3, 2});
  CHECK(f.table() == std::vector<double>{1, 4, 2, 5, 3, 6});
  CHECK(f.at({1, 1}) == 5);
  CHECK_THROWS_AS(Factor({VarId{1}}, {2}, {1.0}), InferenceError);
  CHECK_THROWS_AS(Factor({VarId{1}, VarId{1}}, {2, 2}, {1, 1, 1, 1}), InferenceError);
  CHECK_THROWS_AS(Factor({VarId{1}}, {2}, {1.0, -1.0}), InferenceError);
  CHECK_THROWS_AS(Factor({VarId{1}}, {2}, {1.0, NAN}), InferenceError);
}

TEST_CASE("lowering a flip") {
  ExpandedModel m = expand(parse("a = flip(0.6)"));
  FactorSet fs = lower(m);
  REQUIRE(fs.size() == 1);
  // support order is false, true
  CHECK(fs[0].table() == std::vector<double>{0.4, 0.6});
}

TEST_CASE("lowering an and") {
  ExpandedModel m = fig1();
  FactorSet fs = lower_variable(m, m.at("b.T.z1"));
  REQUIRE(fs.size() == 1);
  CHECK(fs[0].size() == 8);
  int ones = 0;
  for (double x : fs[0].table()) ones += x == 1.0;
  CHECK(ones == 4);
  // rows of the truth table
  std::size_t px = fs[0].position(m.at("b.T.x1")), py = fs[0].position(m.at("b.T.y1")), pz = fs[0].position(m.at("b.T.z1"));
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t y = 0; y < 2; ++y) {
      std::vector<std::size_t> a(3);
      a[px] = x;
      a[py] = y;
      a[pz] = (x && y) ? 1 : 0;
      CHECK(fs[0].at(a) == 1.0);
    }
  // summing the output away leaves all ones over the inputs
  Factor rest = sum_out(fs[0], m.at("b.T.z1"));
  for (double x : rest.table()) CHECK(x == 1.0);
}

TEST_CASE("lowering an apply with a repeated argument") {
  ExpandedModel m = expand(parse("a = flip(0.3)\nb = apply(a, a, (x, y) => x && !y)"));
  FactorSet fs = lower_variable(m, m.at("b"));
  REQUIRE(fs.size() == 1);
  CHECK(fs[0].vars().size() == 2);
  CHECK(m.support(m.at("b")) == std::vector<Value>{Value::boolean(false)});
}

TEST_CASE("lowering the chain in the two-chain model") {
  ExpandedModel m = fig1();
  VarId a = m.at("a"), b = m.at("b");
  FactorSet chain = lower_variable(m, b);
  REQUIRE(chain.size() == 3);
  CHECK(chain[0].vars().size() == 3);
  CHECK(chain[1].vars().size() == 3);
  CHECK(chain[2].vars() == std::vector<VarId>{a, b});
  for (double x : chain[2].table()) CHECK(x == 1.0);

  // sum over the internals of chain and branch factors gives P(b | a)
  auto by_var = lower_by_variable(m);
  FactorSet fs = chain;
  for (const char* branch : {"b.T.", "b.F."})
    for (const char* local : {"x1", "y1", "z1", "x2", "y2", "z2", "outcome"}) {
      auto& f = by_var[m.at(std::string(branch) + local).index];
      fs.insert(fs.end(), f.begin(), f.end());
    }
  Factor cpd = marginalize_to(product(fs), {a, b});
  auto expected = oracle::conditional(m, a, b);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(cpd.at({i, j}) == doctest::Approx(expected[i][j]).epsilon(1e-12));
  CHECK(expected[1][1] == doctest::Approx(0.8768).epsilon(1e-12));
  CHECK(expected[0][1] == doctest::Approx(0.2272).epsilon(1e-12));
}

TEST_CASE("chain lowering soundness on random single-chain models") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    ExpandedModel m = expand(gen::random_single_chain(rng));
    VarId p = m.at("p"), r = m.at("r");
    auto by_var = lower_by_variable(m);
    FactorSet fs;
    for (VarId v : m.all_vars())
      if (v != p) fs.insert(fs.end(), by_var[v.index].begin(), by_var[v.index].end());
    Factor cpd = marginalize_to(product(fs), {p, r});
    auto expected = oracle::conditional(m, p, r);
    for (std::size_t x = 0; x < m.card(p); ++x)
      for (std::size_t y = 0; y < m.card(r); ++y) CHECK(std::abs(cpd.at({x, y}) - expected[x][y]) <= 1e-9);
  }
}

TEST_CASE("product") {
  VarId a{0}, b{1};
  Factor f({a}, {2}, {0.6, 0.4});
  Factor g({a}, {2}, {0.5, 0.5});
  CHECK(product(f, g).table() == std::vector<double>{0.3, 0.2});
  Factor ones = Factor::constant({a, b}, {2, 3}, 1.0);
  Factor h({a, b}, {2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(product(h, ones) == h);
  CHECK(product(Factor(), h) == h);
  CHECK_THROWS_AS(product(f, Factor({a}, {3}, {1, 1, 1})), InferenceError);
}

TEST_CASE("product is associative and sums commute on random factors") {
  std::mt19937_64 rng(5);
  std::vector<VarId> pool{VarId{0}, VarId{1}, VarId{2}, VarId{3}};
  std::map<VarId, std::size_t> cards{{VarId{0}, 2}, {VarId{1}, 3}, {VarId{2}, 2}, {VarId{3}, 4}};
  for (int i = 0; i < 200; ++i) {
    Factor f = random_factor(rng, pool, cards), g = random_factor(rng, pool, cards), h = random_factor(rng, pool, cards);
    Factor left = product(product(f, g), h), right = product(f, product(g, h));
    check_close(left, right, 1e-12);
    if (left.vars().size() >= 2) {
      VarId x = left.vars()[0], y = left.vars().back();
      check_close(sum_out(sum_out(left, x), y), sum_out(sum_out(left, y), x), 1e-12);
    }
  }
}

TEST_CASE("sum out") {
  VarId a{0}, b{1};
  Factor f({a}, {2}, {0.3, 0.2});
  Factor s = sum_out(f, a);
  CHECK(s.vars().empty());
  CHECK(s.table() == std::vector<double>{0.5});
  CHECK_THROWS_AS(sum_out(f, b), InferenceError);
  Factor g({a, b}, {2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(sum_out(g, a).table() == std::vector<double>{5, 7, 9});
  CHECK(sum_out(g, b).table() == std::vector<double>{6, 15});
}

TEST_CASE("normalize") {
  Factor f({VarId{0}}, {2}, {0.3, 0.2});
  Factor n = normalize(f);
  CHECK(n.table()[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(n.table()[1] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(normalize(n) == n);
  try {
    normalize(Factor({VarId{0}}, {2}, {0.0, 0.0}));
    FAIL("expected ZeroMass");
  } catch (const InferenceError& e) {
    CHECK(e.kind() == InferenceError::Kind::ZeroMass);
  }
}

TEST_CASE("rescaling keeps represented values") {
  Factor f({VarId{0}}, {2}, {1e-200, 3e-200});
  Factor r = f.rescaled();
  CHECK(r.table()[1] == 1.0);
  CHECK(std::abs(r.value(0) / 1e-200 - 1.0) < 1e-12);
  Factor deep = r;
  for (int i = 0; i < 5; ++i) deep = product(deep, r).rescaled();
  CHECK(normalize(deep).table()[1] == doctest::Approx(std::pow(3.0, 6) / (1 + std::pow(3.0, 6))));
}

TEST_CASE("evidence") {
  ExpandedModel m = fig1();
  VarId a = m.at("a"), b = m.at("b");
  FactorSet base = lower(m);
  CHECK(condition(m, base, {}).size() == base.size());

  FactorSet fs = condition(m, base, {{a, Value::boolean(true)}});
  CHECK(fs.size() == base.size() + 1);
  auto marg = brute_marginal(fs, b);
  CHECK(marg[1] == doctest::Approx(0.8768).epsilon(1e-9));
  CHECK(marg[1] == doctest::Approx(1 - (1 - 0.9 * 0.8) * (1 - 0.7 * 0.8)).epsilon(1e-12));

  FactorSet contradictory = condition(m, base, {{a, Value::boolean(true)}});
  contradictory = condition(m, contradictory, {{a, Value::boolean(false)}});
  CHECK_THROWS_AS(brute_marginal(contradictory, b), InferenceError);
  CHECK_THROWS_AS(condition(m, base, {{a, Value::integer(2)}}), InferenceError);

  // evidence carried by the model is lowered the same way
  ExpandedModel me = m.with_evidence(std::map<std::string, Value>{{"a", Value::boolean(true)}});
  CHECK(lower(me).size() == base.size() + 1);
}

TEST_CASE("product of all factors matches enumeration on random models") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 100; ++i) {
    ExpandedModel m = expand(gen::random_program(rng));
    m = m.with_evidence(gen::random_evidence(m, rng, 2));
    FactorSet fs = lower(m);
    for (VarId q : m.all_vars()) {
      auto expected = oracle::marginal(m, q);
      auto got = brute_marginal(fs, q);
      for (std::size_t k = 0; k < expected.size(); ++k) CHECK(std::abs(expected[k] - got[k]) <= 1e-9);
    }
  }
}

TEST_CASE("dump format") {
  ExpandedModel m = expand(parse("a = flip(0.6)\nb = apply(a, (x) => !x)"));
  FactorSet fs = lower_variable(m, m.at("b"));
  CHECK(fs[0].dump(&m) ==
        "vars: a(2) b(2)\n"
        "0 | false false | 0\n"
        "1 | false true | 1\n"
        "2 | true false | 1\n"
        "3 | true true | 0\n");
  CHECK(Factor({VarId{3}}, {2}, {0.25, 0.75}).dump() == "vars: v3(2)\n0 | 0 | 0.25\n1 | 1 | 0.75\n");
}

#include <doctest.h>

#include <random>

#include "oracle.h"
#include "random_models.h"
#include "sfi/expanded_model.h"
#include "sfi/parser.h"
#include "sfi/program.h"

using namespace sfi;

namespace {

Program fig1() { return parse_file(SFI_TEST_DATA "/fig1.sppl"); }

Lambda and2() {
  return Lambda{{"b1", "b2"}, FnExpr::binary(FnOp::And, FnExpr::param(0), FnExpr::param(1))};
}

VarSet ids(const ExpandedModel& m, std::initializer_list<const char*> names) {
  VarSet out;
  for (const char* n : names) out.insert(m.at(n));
  return out;
}

// E^r straight from the definition: members of U_r used by something outside U_r.
VarSet literal_externals(const ExpandedModel& m, VarId r) {
  VarSet ur = uses_set(m, r);
  VarSet out;
  for (VarId y : m.all_vars()) {
    if (ur.count(y)) continue;
    for (VarId x : uses_set(m, y))
      if (ur.count(x) && x != r) out.insert(x);
  }
  return out;
}

}  // namespace

TEST_CASE("values are totally ordered, hashable and exact") {
  CHECK(Value::boolean(false) < Value::boolean(true));
  CHECK(Value::integer(3) < Value::integer(10));
  CHECK(Value::rational(Rational(1, 3)) < Value::rational(Rational(1, 2)));
  CHECK(Value::rational(Rational(2, 4)) == Value::rational(Rational(1, 2)));
  CHECK(Value::symbol("a") < Value::symbol("b"));
  CHECK(Value::boolean(true) < Value::integer(0));  // kinds order first
  CHECK(std::hash<Value>{}(Value::rational(Rational(2, 4))) == std::hash<Value>{}(Value::rational(Rational(1, 2))));
  CHECK(Value::boolean(true).label() == "T");
  CHECK(Value::symbol("red").literal() == "`red`");
  CHECK_THROWS_AS(Rational(1, 0), std::exception);
}

TEST_CASE("available set") {
  Program p = fig1();
  CHECK(available_set(p, "c") == std::set<std::string>{"a", "b"});
  CHECK(available_set(p, "a").empty());
  const auto& branch = *std::get<ChainExpr>(p.find("b")->expr).find_branch(Value::boolean(true));
  CHECK(available_set(branch, "z1") == std::set<std::string>{"x1", "y1"});
  Program with_free({"q"}, {{"a", flip(0.5)}});
  CHECK(available_set(with_free, "a") == std::set<std::string>{"q"});
  CHECK_THROWS_AS(available_set(p, "nope"), ModelError);
}

TEST_CASE("program validation") {
  CHECK_NOTHROW(fig1().validate());
  Program use_before({}, {{"z", apply({"x"}, Lambda{{"v"}, FnExpr::param(0)})}, {"x", flip(0.5)}});
  CHECK_THROWS_AS(use_before.validate(), ModelError);
  Program dup({}, {{"x", flip(0.5)}, {"x", flip(0.5)}});
  CHECK_THROWS_AS(dup.validate(), ModelError);
  Program empty({}, {});
  CHECK_THROWS_AS(empty.validate(), ModelError);
  Program bad_cat({}, {{"x", categorical({{Value::integer(1), 0.5}, {Value::integer(2), 0.4}})}});
  CHECK_THROWS_AS(bad_cat.validate(), ModelError);
  Program no_outcome({}, {{"a", flip(0.5)},
                          {"b", chain("a", {{Value::boolean(true), Program({}, {{"z", flip(0.1)}})},
                                            {Value::boolean(false), Program({}, {{"outcome", flip(0.1)}})}})}});
  CHECK_THROWS_AS(no_outcome.validate(), ModelError);
}

TEST_CASE("expanding the two-chain model") {
  ExpandedModel m = expand(fig1());
  CHECK(m.size() == 31);
  CHECK(m.chain_instances().size() == 2);
  for (const auto& ci : m.chain_instances()) CHECK(ci.outcomes.size() == 2);
  CHECK(m.find("b.T.x1"));
  CHECK(m.find("c.F.outcome"));
  CHECK(m.support(m.at("b")) == std::vector<Value>{Value::boolean(false), Value::boolean(true)});
  // ids are topological: branch variables precede their chain
  CHECK(m.at("b.T.outcome") < m.at("b"));
  CHECK(m.at("a") < m.at("b.F.x1"));

  ExpandedModel again = expand(fig1());
  for (VarId v : m.all_vars()) {
    CHECK(m.name(v) == again.name(v));
    CHECK(m.support(v) == again.support(v));
  }
}

TEST_CASE("supports are computed bottom-up") {
  Program p({}, {{"a", flip(0.5)},
                 {"b", chain("a", [](const Value& v) { return Program({}, {{"outcome", value(v)}}); })},
                 {"n", categorical({{Value::integer(3), 0.5}, {Value::integer(1), 0.5}})},
                 {"s", apply({"n", "n"}, Lambda{{"x", "y"}, FnExpr::binary(FnOp::Add, FnExpr::param(0),
                                                                          FnExpr::param(1))})},
                 {"u", uniform(Rational(0), Rational(1), 4)},
                 {"never", categorical({{Value::integer(1), 1.0}, {Value::integer(2), 0.0}})}});
  ExpandedModel m = expand(p);
  CHECK(m.support(m.at("b")) == std::vector<Value>{Value::boolean(false), Value::boolean(true)});
  CHECK(m.support(m.at("s")) == std::vector<Value>{Value::integer(2), Value::integer(6)});
  CHECK(m.card(m.at("u")) == 4);
  CHECK(m.support(m.at("u")).front() == Value::rational(Rational(1, 8)));
  CHECK(m.card(m.at("never")) == 1);
}

TEST_CASE("expansion errors") {
  SUBCASE("chain referring to itself") {
    Program p({}, {{"a", flip(0.5)},
                   {"b", chain("a", {{Value::boolean(true), Program({}, {{"outcome", apply({"b"}, Lambda{{"v"}, FnExpr::param(0)})}})},
                                     {Value::boolean(false), Program({}, {{"outcome", flip(0.5)}})}})}});
    try {
      expand(p);
      FAIL("expected an error");
    } catch (const ModelError& e) {
      CHECK(e.kind() == ModelError::Kind::RecursionDetected);
    }
  }
  SUBCASE("generator that expands itself forever") {
    auto gen = std::make_shared<ChainExpr::Generator>();
    *gen = [gen](const Value&) {
      return Program({}, {{"q", flip(0.5)}, {"outcome", chain("q", *gen)}});
    };
    Program p({}, {{"a", flip(0.5)}, {"b", chain("a", *gen)}});
    try {
      expand(p);
      FAIL("expected an error");
    } catch (const ModelError& e) {
      CHECK(e.kind() == ModelError::Kind::RecursionDetected);
    }
  }
  SUBCASE("missing branch") {
    Program p({}, {{"n", categorical({{Value::integer(1), 0.5}, {Value::integer(2), 0.5}})},
                   {"b", chain("n", {{Value::integer(1), Program({}, {{"outcome", flip(0.5)}})}})}});
    try {
      expand(p);
      FAIL("expected an error");
    } catch (const ModelError& e) {
      CHECK(e.kind() == ModelError::Kind::MissingBranch);
    }
  }
  SUBCASE("type error inside an apply") {
    Program p({}, {{"a", flip(0.5)}, {"n", value(Value::integer(1))}, {"z", apply({"a", "n"}, and2())}});
    try {
      expand(p);
      FAIL("expected an error");
    } catch (const ModelError& e) {
      CHECK(e.kind() == ModelError::Kind::EvalFailure);
    }
  }
}

TEST_CASE("evidence must lie in the support") {
  ExpandedModel m = expand(fig1());
  CHECK(m.with_evidence(std::map<std::string, Value>{{"a", Value::boolean(true)}}).evidence().size() == 1);
  CHECK_THROWS_AS(m.with_evidence(std::map<std::string, Value>{{"a", Value::integer(3)}}), ModelError);
  CHECK_THROWS_AS(m.with_evidence(std::map<std::string, Value>{{"zz", Value::boolean(true)}}), ModelError);
}

TEST_CASE("uses sets") {
  ExpandedModel m = expand(fig1());
  CHECK(uses_set(m, m.at("b.T.outcome")) ==
        ids(m, {"b.T.outcome", "b.T.x1", "b.T.y1", "b.T.z1", "b.T.x2", "b.T.y2", "b.T.z2"}));
  CHECK(uses_set(m, m.at("a")) == VarSet{m.at("a")});
  VarSet ub = uses_set(m, m.at("b"));
  VarSet expected{m.at("b"), m.at("a")};
  for (const char* o : {"b.T.outcome", "b.F.outcome"}) {
    auto u = uses_set(m, m.at(o));
    expected.insert(u.begin(), u.end());
  }
  CHECK(ub == expected);
}

TEST_CASE("external sets") {
  ExpandedModel m = expand(fig1());
  CHECK(external_set(m, m.at("b.T.outcome")).empty());
  CHECK(external_set(m, m.at("b")) == VarSet{m.at("a")});
  // every top-level variable agrees with the definition taken literally
  for (const char* r : {"a", "b", "c"}) CHECK(external_set(m, m.at(r)) == literal_externals(m, m.at(r)));

  Program root({}, {{"a", flip(0.5)}, {"q", apply({"a"}, Lambda{{"v"}, FnExpr::param(0)})}});
  ExpandedModel rm = expand(root);
  CHECK(external_set(rm, rm.at("q")).empty());

  // a branch using an outer variable exposes it
  Program p({}, {{"a", flip(0.5)},
                 {"e", flip(0.3)},
                 {"b", chain("a", {{Value::boolean(true), Program({}, {{"outcome", apply({"e"}, Lambda{{"v"}, FnExpr::param(0)})}})},
                                   {Value::boolean(false), Program({}, {{"outcome", flip(0.5)}})}})}});
  ExpandedModel pm = expand(p);
  // e reaches the rest of the model only through the outcome itself
  CHECK(external_set(pm, pm.at("b.T.outcome")).empty());
  // the branch interface still lists it, since e is defined outside the branch
  CHECK(pm.scope(pm.var(pm.at("b.T.outcome")).scope).externals == VarSet{pm.at("e")});

  Program shared({}, {{"a", flip(0.5)},
                      {"e", flip(0.3)},
                      {"b", chain("a", {{Value::boolean(true), Program({}, {{"outcome", apply({"e"}, Lambda{{"v"}, FnExpr::param(0)})}})},
                                        {Value::boolean(false), Program({}, {{"outcome", flip(0.5)}})}})},
                      {"d", apply({"e"}, Lambda{{"v"}, FnExpr::negation(FnExpr::param(0))})}});
  ExpandedModel sm = expand(shared);
  CHECK(external_set(sm, sm.at("b.T.outcome")) == VarSet{sm.at("e")});
}

TEST_CASE("uses and external set laws on random models") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 40; ++i) {
    ExpandedModel m = expand(gen::random_program(rng));
    for (VarId r : m.all_vars()) {
      VarSet u = uses_set(m, r);
      CHECK(u.count(r));
      for (VarId x : u)
        for (VarId y : uses_set(m, x)) CHECK(u.count(y));
      for (VarId x : external_set(m, r)) CHECK(u.count(x));
    }
  }
}

TEST_CASE("enumerated values stay inside computed supports") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 40; ++i) {
    ExpandedModel m = expand(gen::random_program(rng));
    auto all = m.all_vars();
    auto j = oracle::joint(m, all);
    for (const auto& [assignment, p] : j)
      for (std::size_t k = 0; k < all.size(); ++k) CHECK(m.value_index(all[k], assignment[k]).has_value());
  }
}

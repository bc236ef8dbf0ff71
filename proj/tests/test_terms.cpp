#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "ers/diag.hpp"
#include "test_support.hpp"

using namespace ers;
using namespace ers::test;

namespace {

term_ptr cst(op_id o) { return mk_app(o, {}); }

term_ptr pair2(op_id o, term_ptr x, term_ptr y) {
  return mk_app(o, {std::move(x), std::move(y)});
}

}  // namespace

TEST_CASE("kind completion groups connected sorts under one synthetic top") {
  set_sig s = make_set_sig();
  const signature& sig = *s.sig;
  auto top = sig.find_sort("[Set]");
  REQUIRE(top.has_value());
  CHECK(sig.sort(*top).is_kind_top);
  CHECK(sig.leq(s.elem, *top));
  CHECK(sig.leq(s.set, *top));
  CHECK(sig.leq(s.elem, s.set));
  CHECK_FALSE(sig.leq(s.set, s.elem));
  CHECK(sig.same_kind(s.elem, s.set));
  CHECK_FALSE(sig.same_kind(s.elem, sig.int_sort));
  CHECK(sig.find_sort("[Int]").has_value());
  CHECK(sig.find_sort("[Stage]").has_value());
  CHECK(sig.leq(sig.state_sort, sig.stage_sort));
  CHECK(sig.leq(sig.trans_sort, sig.stage_sort));
}

TEST_CASE("kind top is named after the first maximal member") {
  signature_builder sb;
  sb.add_sort("A");
  sb.add_sort("B");
  sb.add_sort("C");
  sb.add_subsort("C", "A");
  sb.add_subsort("C", "B");
  auto sig = sb.build();
  auto top = sig->find_sort("[A]");
  REQUIRE(top.has_value());
  CHECK(sig->leq(*sig->find_sort("C"), *top));
  CHECK(sig->leq(*sig->find_sort("B"), *top));
  CHECK_FALSE(sig->leq(*sig->find_sort("A"), *sig->find_sort("B")));
}

TEST_CASE("builder deduplicates sorts and rejects subsort cycles") {
  {
    signature_builder sb;
    sb.add_sort("A");
    sb.add_sort("A");
    CHECK(sb.sort_names().size() == 1);
  }
  {
    signature_builder sb;
    sb.add_sort("A");
    sb.add_sort("B");
    sb.add_subsort("A", "B");
    sb.add_subsort("B", "A");
    CHECK_THROWS_AS(sb.build(), engine_error);
  }
}

TEST_CASE("identity declarations resolve to the named constant") {
  set_sig s = make_set_sig();
  const op_info& comma = s.sig->op(s.comma);
  REQUIRE(comma.identity);
  CHECK(term_eq(comma.identity, cst(s.mt)));
  CHECK(comma.assoc);
  CHECK(comma.comm);
}

TEST_CASE("mixfix names split into pieces and holes") {
  CHECK(mixfix_pieces("_+_") == std::vector<std::string>{"_", "+", "_"});
  CHECK(mixfix_pieces("<_,_>") ==
        std::vector<std::string>{"<", "_", ",", "_", ">"});
  CHECK(mixfix_pieces("lmoving|_") ==
        std::vector<std::string>{"lmoving", "|", "_"});
  CHECK(mixfix_pieces("__") == std::vector<std::string>{"_", "_"});
  CHECK(mixfix_pieces("f") == std::vector<std::string>{"f"});
  CHECK(mixfix_pieces("p @ _") == std::vector<std::string>{"p", "@", "_"});
}

TEST_CASE("canonical forms ignore association, order, and identities") {
  set_sig s = make_set_sig();
  const signature& sig = *s.sig;
  term_ptr A = cst(s.a), B = cst(s.b), C = cst(s.c), MT = cst(s.mt);

  term_ptr left = pair2(s.comma, pair2(s.comma, A, B), C);
  term_ptr right = pair2(s.comma, C, pair2(s.comma, B, A));
  CHECK(term_eq(canonicalize(sig, left), canonicalize(sig, right)));

  CHECK(term_eq(canonicalize(sig, pair2(s.comma, A, MT)), A));
  CHECK(term_eq(canonicalize(sig, pair2(s.comma, MT, MT)), MT));

  term_ptr mAB = canonicalize(sig, pair2(s.m, B, A));
  term_ptr mBA = canonicalize(sig, pair2(s.m, A, B));
  CHECK(term_eq(mAB, mBA));

  // free operators keep argument order
  CHECK_FALSE(term_eq(canonicalize(sig, pair2(s.f, A, B)),
                      canonicalize(sig, pair2(s.f, B, A))));
}

TEST_CASE("canonicalize is idempotent and invariant under presentation") {
  set_sig s = make_set_sig();
  const signature& sig = *s.sig;
  rng_t rng(20260816);
  for (int i = 0; i < 500; ++i) {
    term_ptr t = gen_set(s, rng, 3);
    term_ptr c1 = canonicalize(sig, t);
    CHECK(term_eq(c1, canonicalize(sig, c1)));
  }
  // same multiset of leaves, two random tree shapes
  for (int i = 0; i < 200; ++i) {
    int n = 2 + pick(rng, 3);
    std::vector<term_ptr> kids;
    for (int j = 0; j < n; ++j) kids.push_back(gen_elem(s, rng, 1));
    auto build = [&](std::vector<term_ptr> v) {
      std::shuffle(v.begin(), v.end(), rng);
      term_ptr t = v[0];
      for (std::size_t j = 1; j < v.size(); ++j) {
        if (pick(rng, 2) == 0)
          t = pair2(s.comma, t, v[j]);
        else
          t = pair2(s.comma, v[j], t);
      }
      return t;
    };
    CHECK(term_eq(canonicalize(sig, build(kids)),
                  canonicalize(sig, build(kids))));
  }
}

TEST_CASE("term order is total, antisymmetric, and matches equality") {
  set_sig s = make_set_sig();
  const signature& sig = *s.sig;
  rng_t rng(7);
  std::vector<term_ptr> sample;
  for (int i = 0; i < 40; ++i)
    sample.push_back(canonicalize(sig, gen_set(s, rng, 2)));
  sample.push_back(mk_int(3));
  sample.push_back(mk_int(-1));
  sample.push_back(mk_bool(true));
  sample.push_back(mk_var("X", s.elem));
  for (const auto& x : sample)
    for (const auto& y : sample) {
      int c = term_cmp(sig, x, y);
      CHECK(c == -term_cmp(sig, y, x));
      CHECK((c == 0) == term_eq(x, y));
    }
  for (const auto& x : sample)
    for (const auto& y : sample)
      for (const auto& z : sample)
        if (term_cmp(sig, x, y) < 0 && term_cmp(sig, y, z) < 0)
          CHECK(term_cmp(sig, x, z) < 0);
}

TEST_CASE("pinned matching cases") {
  set_sig s = make_set_sig();
  const signature& sig = *s.sig;
  syntactic_oracle oracle(sig);
  term_ptr A = cst(s.a), B = cst(s.b), C = cst(s.c), MT = cst(s.mt);
  term_ptr X = mk_var("X", s.elem), Y = mk_var("Y", s.elem),
           S = mk_var("S", s.set);
  auto mm = [&](term_ptr p, term_ptr t) {
    return match(sig, canonicalize(sig, p), canonicalize(sig, t), oracle);
  };

  SUBCASE("free operators match structurally") {
    auto r = mm(pair2(s.f, X, Y), pair2(s.f, A, mk_app(s.g, {B})));
    REQUIRE(r.size() == 1);
    CHECK(term_eq(r[0].at({"X", s.elem}), A));
    CHECK(term_eq(r[0].at({"Y", s.elem}), mk_app(s.g, {B})));
  }
  SUBCASE("commutative operators try both orders") {
    auto r = mm(pair2(s.m, X, A), pair2(s.m, A, B));
    REQUIRE(r.size() == 1);
    CHECK(term_eq(r[0].at({"X", s.elem}), B));
  }
  SUBCASE("element plus collector enumerates every split") {
    auto r = mm(pair2(s.comma, X, S),
                pair2(s.comma, pair2(s.comma, A, B), C));
    CHECK(r.size() == 3);
    for (const auto& sub : r) {
      term_ptr x = sub.at({"X", s.elem});
      term_ptr rest = sub.at({"S", s.set});
      CHECK(term_eq(canonicalize(sig, pair2(s.comma, x, rest)),
                    canonicalize(sig,
                                 pair2(s.comma, pair2(s.comma, A, B), C))));
    }
  }
  SUBCASE("collector absorbs the identity on singleton subjects") {
    auto r = mm(pair2(s.comma, X, S), A);
    REQUIRE(r.size() == 1);
    CHECK(term_eq(r[0].at({"X", s.elem}), A));
    CHECK(term_eq(r[0].at({"S", s.set}), MT));
  }
  SUBCASE("two elements against two children permute") {
    auto r = mm(pair2(s.comma, X, Y), pair2(s.comma, A, B));
    CHECK(r.size() == 2);
  }
  SUBCASE("arity mismatch without a collector fails") {
    auto r = mm(pair2(s.comma, X, Y),
                pair2(s.comma, pair2(s.comma, A, B), C));
    CHECK(r.empty());
  }
  SUBCASE("declared sorts gate bindings") {
    CHECK(mm(X, pair2(s.comma, A, B)).empty());
    CHECK(mm(S, A).size() == 1);
  }
  SUBCASE("two collectors under one node are rejected") {
    term_ptr S2 = mk_var("S2", s.set);
    CHECK_THROWS_AS(mm(pair2(s.comma, S, S2), pair2(s.comma, A, B)),
                    engine_error);
  }
  SUBCASE("seeded bindings must agree") {
    subst seed;
    seed[{"X", s.elem}] = B;
    auto r = match(sig, canonicalize(sig, pair2(s.comma, X, S)),
                   canonicalize(sig, pair2(s.comma, A, B)), oracle, seed);
    REQUIRE(r.size() == 1);
    CHECK(term_eq(r[0].at({"S", s.set}), A));
  }
}

TEST_CASE("matching agrees with the brute-force definitional oracle") {
  set_sig s = make_set_sig();
  const signature& sig = *s.sig;
  syntactic_oracle oracle(sig);
  rng_t rng(123456);
  int nonempty = 0;
  for (int i = 0; i < 400; ++i) {
    term_ptr pat = canonicalize(sig, gen_pattern(s, rng));
    term_ptr subj = canonicalize(sig, gen_set(s, rng, 3));
    auto got = match(sig, pat, subj, oracle);
    auto want = oracle_match(sig, pat, subj);
    bool same = subst_sets_equal(got, want);
    CHECK(same);
    if (!same) {
      MESSAGE("pattern: " << print_term(sig, pat));
      MESSAGE("subject: " << print_term(sig, subj));
      MESSAGE("engine " << got.size() << " oracle " << want.size());
    }
    if (!got.empty()) ++nonempty;
  }
  CHECK(nonempty > 40);  // the suite actually exercises matches
}

TEST_CASE("substitution application canonicalizes its result") {
  set_sig s = make_set_sig();
  const signature& sig = *s.sig;
  term_ptr A = cst(s.a), B = cst(s.b), C = cst(s.c);
  subst sub;
  sub[{"X", s.elem}] = C;
  sub[{"S", s.set}] = canonicalize(sig, pair2(s.comma, A, B));
  term_ptr pat = pair2(s.comma, mk_var("X", s.elem), mk_var("S", s.set));
  term_ptr want =
      canonicalize(sig, pair2(s.comma, pair2(s.comma, A, B), C));
  CHECK(term_eq(apply_subst(sig, sub, pat), want));
  // unbound variables stay in place
  term_ptr partial = apply_subst(sig, sub, pair2(s.f, mk_var("X", s.elem),
                                                 mk_var("Y", s.elem)));
  CHECK(has_vars(partial));
}

TEST_CASE("printing follows precedence and mixfix spacing") {
  set_sig s = make_set_sig();
  const signature& sig = *s.sig;
  auto one = [&](const char* n) { return sig.ops_named(n).at(0); };
  op_id plus = one("_+_"), minus = one("_-_"), times = one("_*_");
  term_ptr A = cst(s.a), B = cst(s.b), C = cst(s.c);

  CHECK(print_term(sig, mk_app(plus, {mk_int(1),
                                      mk_app(times, {mk_int(2), mk_int(3)})})) ==
        "1 + 2 * 3");
  CHECK(print_term(sig, mk_app(times, {mk_app(plus, {mk_int(1), mk_int(2)}),
                                       mk_int(3)})) == "(1 + 2) * 3");
  CHECK(print_term(sig, mk_app(minus, {mk_app(minus, {mk_int(1), mk_int(2)}),
                                       mk_int(3)})) == "1 - 2 - 3");
  CHECK(print_term(sig, mk_app(minus, {mk_int(1),
                                       mk_app(minus, {mk_int(2), mk_int(3)})})) ==
        "1 - (2 - 3)");
  CHECK(print_term(sig, canonicalize(sig, pair2(s.comma,
                                                pair2(s.comma, A, B), C))) ==
        "a, b, c");
  CHECK(print_term(sig, pair2(s.angle, A, B)) == "< a, b >");
  CHECK(print_term(sig, pair2(s.f, A, mk_app(s.g, {B}))) == "f(a, g(b))");
  CHECK(print_term(sig, pair2(s.bar, A, B)) == "a | b");
  CHECK(print_term(sig, pair2(s.juxt, A, B)) == "a b");
  CHECK(print_term(sig, mk_app(s.prop, {cst(s.mt)})) == "p @ mt");
  CHECK(print_term(sig, mk_app(s.prop, {pair2(s.bar, A, B)})) ==
        "p @ (a | b)");
  CHECK(print_term(sig, mk_var("X", s.elem)) == "X");
  CHECK(print_term(sig, mk_int(-4)) == "-4");
  CHECK(print_term(sig, mk_bool(true)) == "true");
}

TEST_CASE("qualified pieces can print stripped") {
  signature_builder sb = prelude_builder(false);
  sb.add_sort("T");
  signature_builder::op_decl d;
  d.name = "LTRAIN.stopped";
  d.result = "T";
  sb.add_op(d);
  auto sig = sb.build();
  term_ptr t = mk_app(sig->ops_named("LTRAIN.stopped").at(0), {});
  CHECK(print_term(*sig, t) == "LTRAIN.stopped");
  print_options strip;
  strip.strip_qualifiers = true;
  CHECK(print_term(*sig, t, strip) == "stopped");
}

TEST_CASE("syntactic least sorts") {
  set_sig s = make_set_sig();
  const signature& sig = *s.sig;
  term_ptr A = cst(s.a), B = cst(s.b);
  CHECK(least_sort_syntactic(sig, A) == s.elem);
  CHECK(least_sort_syntactic(sig, cst(s.mt)) == s.set);
  CHECK(least_sort_syntactic(sig, canonicalize(sig, pair2(s.comma, A, B))) ==
        s.set);
  CHECK(least_sort_syntactic(sig, mk_var("S", s.set)) == s.set);
  CHECK(least_sort_syntactic(sig, mk_int(5)) == sig.int_sort);
  CHECK(least_sort_syntactic(sig, mk_bool(false)) == sig.bool_sort);

  // argument fits only at kind level: result degrades to the kind top
  term_ptr kinded = mk_app(s.f, {A, canonicalize(sig, pair2(s.comma, A, B))});
  sort_id ks = least_sort_syntactic(sig, kinded);
  CHECK(sig.sort(ks).is_kind_top);
  CHECK(sig.same_kind(ks, s.elem));

  // cross-kind application is malformed
  op_id plus = sig.ops_named("_+_").at(0);
  CHECK_THROWS_AS(least_sort_syntactic(sig, mk_app(plus, {mk_int(1), A})),
                  engine_error);
}

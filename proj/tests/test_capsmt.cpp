// Bundled solver: ground reasoning (EUF, datatypes, offset arithmetic),
// quantifier instantiation, and end-to-end answers on hand-written scripts.
#include <doctest.h>

#include <string>

#include "../src/capsmt/engine.hpp"

using capsmt::Answer;

namespace {

Answer solve_text(const std::string& text)
{
  capsmt::Problem p = capsmt::parse_script(text);
  return capsmt::solve(p);
}

}  // namespace

TEST_CASE("propositional basics")
{
  CHECK(solve_text("(assert false)(check-sat)") == Answer::Unsat);
  CHECK(solve_text("(assert true)(check-sat)") == Answer::Sat);
  CHECK(solve_text("(declare-const p Bool)(assert (and p (not p)))(check-sat)")
        == Answer::Unsat);
  CHECK(solve_text("(declare-const p Bool)(declare-const q Bool)"
                   "(assert (or p q))(assert (not p))(check-sat)")
        == Answer::Sat);
}

TEST_CASE("equality and congruence")
{
  CHECK(solve_text("(declare-sort S 0)(declare-const a S)(declare-const b S)"
                   "(assert (= a b))(assert (not (= b a)))(check-sat)")
        == Answer::Unsat);
  CHECK(solve_text("(declare-sort S 0)(declare-const a S)(declare-const b S)"
                   "(declare-fun f (S) S)"
                   "(assert (= a b))(assert (not (= (f a) (f b))))(check-sat)")
        == Answer::Unsat);
  CHECK(solve_text("(declare-sort S 0)(declare-const a S)(declare-const b S)"
                   "(declare-fun f (S) S)"
                   "(assert (not (= (f a) (f b))))(check-sat)")
        == Answer::Sat);
  CHECK(solve_text("(declare-const x Int)(declare-const y Int)(declare-const z Int)"
                   "(assert (= x y))(assert (= y z))(assert (not (= x z)))(check-sat)")
        == Answer::Unsat);
}

TEST_CASE("integer offsets and constants")
{
  CHECK(solve_text("(declare-const x Int)(declare-const y Int)"
                   "(assert (= y (+ x 1)))(assert (= x 5))"
                   "(assert (not (= y 6)))(check-sat)")
        == Answer::Unsat);
  CHECK(solve_text("(declare-const x Int)(declare-const y Int)(declare-const z Int)"
                   "(assert (= y (+ x 1)))(assert (= z (+ y 1)))"
                   "(assert (not (= z (+ x 2))))(check-sat)")
        == Answer::Unsat);
  CHECK(solve_text("(declare-const x Int)(assert (= x (+ x 1)))(check-sat)")
        == Answer::Unsat);
  CHECK(solve_text("(declare-const x Int)(declare-const y Int)"
                   "(assert (not (= x y)))(check-sat)")
        == Answer::Sat);
  CHECK(solve_text("(declare-const x Int)(assert (<= x 3))(assert (<= 4 x))(check-sat)")
        == Answer::Unsat);
  CHECK(solve_text("(declare-const x Int)(assert (<= x 3))(assert (<= 3 x))"
                   "(assert (not (= x 3)))(check-sat)")
        == Answer::Unsat);
  CHECK(solve_text("(declare-const x Int)(assert (< x 3))(assert (< 1 x))"
                   "(assert (not (= x 2)))(check-sat)")
        == Answer::Unsat);
}

TEST_CASE("boolean structure with theory atoms")
{
  CHECK(solve_text("(declare-const x Int)(declare-const y Int)"
                   "(assert (= (= x 1) (= y 1)))(assert (= x 1))"
                   "(assert (not (= y 1)))(check-sat)")
        == Answer::Unsat);
  CHECK(solve_text("(declare-const x Int)"
                   "(assert (ite (= x 1) (= x 2) (= x 3)))(assert (= x 1))(check-sat)")
        == Answer::Unsat);
}

TEST_CASE("datatypes: injectivity, distinctness, selectors, exhaustiveness")
{
  const char* prelude =
    "(declare-datatypes ((Pair 0)) (((mk (first Int) (second Int)))))"
    "(declare-const p Pair)(declare-const q Pair)";
  CHECK(solve_text(std::string(prelude)
                   + "(assert (= (mk 1 2) (mk 1 3)))(check-sat)")
        == Answer::Unsat);
  CHECK(solve_text(std::string(prelude)
                   + "(assert (= p (mk 1 2)))(assert (not (= (first p) 1)))(check-sat)")
        == Answer::Unsat);
  // Single-constructor extensionality.
  CHECK(solve_text(std::string(prelude)
                   + "(assert (= (first p) (first q)))(assert (= (second p) (second q)))"
                     "(assert (not (= p q)))(check-sat)")
        == Answer::Unsat);
  const char* opt =
    "(declare-datatypes ((Opt 0)) (((none) (some (val Int)))))"
    "(declare-const o Opt)";
  CHECK(solve_text(std::string(opt) + "(assert (= o none))"
                                      "(assert ((_ is some) o))(check-sat)")
        == Answer::Unsat);
  CHECK(solve_text(std::string(opt)
                   + "(assert (not (= o none)))"
                     "(assert (not ((_ is some) o)))(check-sat)")
        == Answer::Unsat);
  CHECK(solve_text(std::string(opt) + "(assert (= o (some 3)))"
                                      "(assert (not (= (val o) 3)))(check-sat)")
        == Answer::Unsat);
}

TEST_CASE("define-fun expansion")
{
  CHECK(solve_text("(define-fun inc ((x Int)) Int (+ x 1))"
                   "(declare-const a Int)"
                   "(assert (= (inc a) 5))(assert (not (= a 4)))(check-sat)")
        == Answer::Unsat);
  CHECK(solve_text("(declare-datatypes ((Opt 0)) (((none) (some (val Int)))))"
                   "(define-fun issome ((o Opt)) Bool ((_ is some) o))"
                   "(declare-const x Opt)"
                   "(assert (issome x))(assert (= x none))(check-sat)")
        == Answer::Unsat);
}

TEST_CASE("quantified axioms fire through instantiation")
{
  const char* script =
    "(declare-sort A 0)(declare-sort V 0)"
    "(declare-fun p (Int A V) Bool)(declare-fun q (Int A V) Bool)"
    "(declare-const a A)(declare-const w V)"
    "(assert (forall ((r Int) (x A) (v V)) (=> (p r x v) (q r x v))))"
    "(assert (p 0 a w))"
    "(assert (not (q 0 a w)))(check-sat)";
  CHECK(solve_text(script) == Answer::Unsat);

  const char* chain =
    "(declare-sort A 0)"
    "(declare-fun p (A) Bool)(declare-fun q (A) Bool)(declare-fun r (A) Bool)"
    "(declare-const a A)"
    "(assert (forall ((x A)) (=> (p x) (q x))))"
    "(assert (forall ((x A)) (=> (q x) (r x))))"
    "(assert (p a))(assert (not (r a)))(check-sat)";
  CHECK(solve_text(chain) == Answer::Unsat);

  const char* sat_case =
    "(declare-sort A 0)"
    "(declare-fun p (A) Bool)(declare-fun q (A) Bool)"
    "(declare-const a A)(declare-const b A)"
    "(assert (forall ((x A)) (=> (p x) (q x))))"
    "(assert (p a))(assert (not (q b)))(check-sat)";
  CHECK(solve_text(sat_case) == Answer::Sat);
}

TEST_CASE("non-aliasing axiom shape forces distinct roots to distinct addresses")
{
  const char* script =
    "(declare-sort A 0)(declare-sort V 0)"
    "(declare-fun unique (Int A V) Bool)(declare-fun read (Int A V) Bool)"
    "(declare-const a1 A)(declare-const a2 A)(declare-const w V)"
    "(assert (forall ((r1 Int) (r2 Int) (x A) (v V))"
    "  (=> (and (unique r1 x v) (read r2 x v)) (= r1 r2))))"
    "(assert (unique 0 a1 w))"
    "(assert (read 1 a2 w))"
    "(assert (= a1 a2))"
    "(check-sat)";
  CHECK(solve_text(script) == Answer::Unsat);
  const char* sat_script =
    "(declare-sort A 0)(declare-sort V 0)"
    "(declare-fun unique (Int A V) Bool)(declare-fun read (Int A V) Bool)"
    "(declare-const a1 A)(declare-const a2 A)(declare-const w V)"
    "(assert (forall ((r1 Int) (r2 Int) (x A) (v V))"
    "  (=> (and (unique r1 x v) (read r2 x v)) (= r1 r2))))"
    "(assert (unique 0 a1 w))"
    "(assert (read 1 a2 w))"
    "(check-sat)";
  CHECK(solve_text(sat_script) == Answer::Sat);
}

TEST_CASE("memory framing pattern: quantified equality over addresses")
{
  const char* script =
    "(declare-sort A 0)(declare-sort V 0)"
    "(declare-fun mem (A V) Int)(declare-fun imm (Int A) Bool)"
    "(declare-const a A)(declare-const v1 V)(declare-const v2 V)"
    "(assert (forall ((r Int) (x A)) (=> (imm r x) (= (mem x v1) (mem x v2)))))"
    "(assert (imm 0 a))"
    "(assert (= (mem a v1) 7))"
    "(assert (not (= (mem a v2) 7)))(check-sat)";
  CHECK(solve_text(script) == Answer::Unsat);
  const char* drift =
    "(declare-sort A 0)(declare-sort V 0)"
    "(declare-fun mem (A V) Int)(declare-fun imm (Int A) Bool)"
    "(declare-const a A)(declare-const v1 V)(declare-const v2 V)"
    "(assert (forall ((r Int) (x A)) (=> (imm r x) (= (mem x v1) (mem x v2)))))"
    "(assert (= (mem a v1) 7))"
    "(assert (not (= (mem a v2) 7)))(check-sat)";
  CHECK(solve_text(drift) == Answer::Sat);
}

TEST_CASE("unsupported features answer unknown")
{
  CHECK(solve_text("(declare-const x Int)(declare-const y Int)"
                   "(assert (= (* x y) 6))(check-sat)")
        == Answer::Unknown);
  CHECK(solve_text("(assert (exists ((x Int)) (= x 0)))(check-sat)") == Answer::Unknown);
}

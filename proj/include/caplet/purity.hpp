// Syntactic purity rules for bodied pure functions and for specification
// expressions. Violations are reported sorted by source span.
#ifndef CAPLET_PURITY_HPP
#define CAPLET_PURITY_HPP

#include <string>
#include <vector>

#include "caplet/typeck.hpp"

namespace caplet {

struct Violation {
  char rule;  // 'a'..'g' for body rules, 's' for spec-call rule
  std::string file;
  Loc loc;
  std::string message;

  bool operator<(const Violation& o) const
  {
    return std::tie(loc, rule, message) < std::tie(o.loc, o.rule, o.message);
  }
  std::string str() const
  {
    return Diag{file, loc, std::string("purity rule (") + rule + "): " + message}.str();
  }
};

// Rules for a bodied function declared at `fn.purity` (must not be None):
//  (a) parameters are copy types
//  (b) assignments target only local variables
//  (c) callees are pure, at a level <= the declared level
//  (d) pure-value bodies do not read through raw pointers, out of
//      UnsafeCell, or observe addresses (ref-to-pointer casts, calls to
//      pure-memory/pure-unstable functions)
//  (e) pure-memory bodies do not read through raw pointers
//  (f) only pure-unstable bodies may use the deref builtin
//  (g) no calls to non-pure functions, no assert, no drop with effects
std::vector<Violation> check_purity(const FunctionInstance& fn, const TypedProgram& prog);

// As check_purity, but pretending the function were declared at `level`.
// Used by the level-monotonicity property tests.
std::vector<Violation> check_purity_at(const FunctionInstance& fn, Purity level,
                                       const TypedProgram& prog);

// Every call inside a specification expression must target a function that
// has some purity level (all three levels are admissible).
std::vector<Violation> check_spec_purity(const Expr& spec, const std::string& file,
                                         const TypedProgram& prog);

// Checks all bodied pure functions, every contract of every function
// instance, and every capability annotation in the program.
std::vector<Violation> check_program_purity(const TypedProgram& prog);

}  // namespace caplet

#endif

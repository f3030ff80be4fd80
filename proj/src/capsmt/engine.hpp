// capsmt: a small SMT solver for the quantified EUF + datatypes + offset
// arithmetic fragment emitted by the caplet encoder.
//
// Quantified axioms are handled by saturating pattern-based instantiation
// over the ground term universe; candidate models are validated against the
// axioms over the represented universe before "sat" is reported. Capability
// predicates default to false off-universe, constructor axioms are
// definitional, so the validated finite structure extends to a full model of
// the emitted fragment.
#ifndef CAPSMT_ENGINE_HPP
#define CAPSMT_ENGINE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "sexpr.hpp"

namespace capsmt {

using TermId = int32_t;
using SortId = int32_t;
using FnId = int32_t;

enum class SortKind { Bool, Int, Uninterp, Datatype };

struct Sort {
  SortKind kind = SortKind::Uninterp;
  std::string name;
  int datatype = -1;
};

struct Ctor {
  std::string name;
  FnId fn = -1;
  std::vector<FnId> selectors;
  std::vector<SortId> arg_sorts;
};

struct Datatype {
  SortId sort = -1;
  std::vector<Ctor> ctors;
};

enum class FnKind { Uninterp, CtorFn, SelFn, Defined };

struct Fn {
  std::string name;
  FnKind kind = FnKind::Uninterp;
  std::vector<SortId> params;
  SortId ret = -1;
  int datatype = -1;
  int ctor_index = -1;
  int sel_index = -1;   // index of the selected constructor argument
  TermId def_body = -1; // Defined only; body over Var 0..n-1
};

enum class Op {
  IntConst,  // num = value
  BoolConst, // num = 0/1
  Var,       // num = bound-variable index
  App,       // num = FnId
  Add,       // n-ary
  Mul,       // args[0] is an IntConst factor
  And,
  Or,
  Not,
  Implies,
  Eq,
  Ite,
  Le,
  Lt,
  Forall,    // num = quantifier table index; args[0] = body
};

struct Term {
  Op op = Op::BoolConst;
  SortId sort = -1;
  long long num = 0;
  std::vector<TermId> args;
};

struct Quant {
  std::vector<std::string> var_names;
  std::vector<SortId> var_sorts;
};

class TermStore {
public:
  TermStore();

  SortId bool_sort() const { return 0; }
  SortId int_sort() const { return 1; }
  SortId add_sort(const std::string& name, SortKind kind);
  SortId find_sort(const std::string& name) const;  // -1 when missing

  FnId add_fn(Fn fn);
  FnId find_fn(const std::string& name) const;

  TermId mk(Op op, SortId sort, long long num, std::vector<TermId> args);
  TermId mk_app(FnId fn, std::vector<TermId> args);
  TermId mk_int(long long v) { return mk(Op::IntConst, int_sort(), v, {}); }
  TermId mk_bool(bool b) { return mk(Op::BoolConst, bool_sort(), b ? 1 : 0, {}); }

  const Term& term(TermId id) const { return terms_[id]; }
  const Sort& sort(SortId id) const { return sorts_[id]; }
  const Fn& fn(FnId id) const { return fns_[id]; }
  size_t term_count() const { return terms_.size(); }

  std::vector<Sort> sorts_;
  std::vector<Fn> fns_;
  std::vector<Datatype> datatypes_;
  std::vector<Quant> quants_;

  // Substitutes Var nodes by `binding` (index-based). Returns the
  // hash-consed result.
  TermId substitute(TermId body, const std::vector<TermId>& binding);

private:
  std::vector<Term> terms_;
  std::map<std::string, SortId> sort_names_;
  std::map<std::string, FnId> fn_names_;
  std::unordered_map<std::string, TermId> hash_;

  std::string key(Op op, SortId sort, long long num, const std::vector<TermId>& args) const;
};

struct Problem {
  TermStore store;
  std::vector<TermId> ground;              // quantifier-free assertions
  std::vector<TermId> axioms;              // Op::Forall assertions
  bool unsupported = false;                // feature outside the fragment
  std::string unsupported_reason;
};

// Parses a script; `unsupported` is set rather than throwing for features
// outside the fragment (the result is then "unknown").
Problem parse_script(const std::string& text);

enum class Answer { Sat, Unsat, Unknown };

struct SolveLimits {
  int max_rounds = 80;
  size_t max_instances = 500000;
  size_t max_terms = 4000000;
  int max_model_repairs = 24;
};

Answer solve(Problem& problem, const SolveLimits& limits = {});

// Ground decision core (exposed for tests): decides the conjunction of the
// given quantifier-free assertions.
Answer solve_ground(Problem& problem, const std::vector<TermId>& ground);

}  // namespace capsmt

#endif

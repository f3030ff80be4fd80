// Internal interfaces of the capsmt ground core.
#ifndef CAPSMT_GROUND_HPP
#define CAPSMT_GROUND_HPP

#include <memory>
#include <optional>
#include <set>
#include <tuple>
#include <unordered_map>

#include "engine.hpp"

namespace capsmt {

struct HashVec {
  size_t operator()(const std::vector<int>& v) const
  {
    size_t h = 1469598103934665603ull;
    for (int x : v) {
      h ^= static_cast<size_t>(x) + 0x9e3779b97f4a7c15ull;
      h *= 1099511628211ull;
    }
    return h;
  }
};

class CongruenceClosure {
public:
  explicit CongruenceClosure(TermStore& st) : st_(st) {}

  int add(TermId t);
  void merge_terms(TermId a, TermId b) { worklist_.push_back({add(a), add(b)}); }
  void add_diseq(TermId a, TermId b) { diseqs_.push_back({add(a), add(b)}); }
  bool propagate();  // false on conflict

  int find(int n);
  int find_existing(TermId t);  // -1 when the term has no node
  TermId node_term(int n) const { return nodes_[n]; }
  int ctor_of_class(int rep) const { return ctor_node_[rep]; }
  int int_const_of_class(int rep) const { return int_const_[rep]; }
  size_t node_count() const { return nodes_.size(); }

private:
  TermStore& st_;
  std::vector<TermId> nodes_;
  std::unordered_map<TermId, int> node_of_;
  std::vector<int> parent_;
  std::vector<int> rank_;
  std::vector<std::vector<int>> parents_;
  std::vector<int> ctor_node_;
  std::vector<int> int_const_;
  std::vector<std::pair<int, int>> diseqs_;
  std::vector<std::pair<int, int>> worklist_;
  std::vector<int> pending_;
  std::unordered_map<std::vector<int>, int, HashVec> sig_;
  bool conflict_ = false;

  void signature(int n);
  void try_eval_selector(int n);
  void do_merge(int a, int b);
};

class OffsetArith {
public:
  explicit OffsetArith(bool& lost_precision) : lost_(lost_precision) {}

  void ensure(int n);
  std::pair<int, long long> find(int x);
  bool assert_diff(int x, int y, long long c);  // x - y = c
  bool assert_value(int x, long long v);
  bool assert_upper(int x, long long c);  // x <= c
  bool assert_lower(int x, long long c);  // x >= c
  bool diff_known(int x, int y, long long& out);
  std::optional<long long> value_of(int x);
  void note_lost_precision() { lost_ = true; }

private:
  bool& lost_;
  std::vector<int> parent_;
  std::vector<long long> offset_;
  std::vector<std::optional<long long>> value_;
  std::vector<std::optional<long long>> lo_, hi_;

  bool set_value_root(int r, long long v);
  bool add_lo_root(int r, long long v);
  bool add_hi_root(int r, long long v);
};

struct TheoryInput {
  TermId atom;
  bool value;
};

struct PolyView {
  std::map<int, long long> coeffs;
  long long constant = 0;
  bool linear = true;
};

class TheoryCheck {
public:
  TheoryCheck(TermStore& st, const std::vector<TermId>& all_terms)
    : st_(st), cc_(st), all_terms_(all_terms)
  {}

  bool run(const std::vector<TheoryInput>& inputs, bool* lost_precision);

  CongruenceClosure& cc() { return cc_; }
  // Integer values chosen for int-sorted classes (by class rep), valid after
  // a successful run.
  const std::map<int, long long>& model_int_values() const { return model_int_values_; }

private:
  enum class Kind { Eq, Diseq, Le };

  TermStore& st_;
  CongruenceClosure cc_;
  const std::vector<TermId>& all_terms_;
  bool lost_ = false;

  std::map<int, int> arith_var_;
  std::vector<int> arith_rep_;
  std::vector<std::tuple<int, long long, long long>> diseq_singles_;
  std::vector<std::tuple<int, int, long long>> diseq_pairs_;
  std::map<int, long long> model_int_values_;

  int arith_var(int rep, OffsetArith& arith);
  PolyView poly_of(TermId t, OffsetArith& arith);
  void simplify(PolyView& p, OffsetArith& arith);
  bool assert_poly(PolyView p, Kind kind, OffsetArith& arith);
  bool arith_pass(const std::vector<TheoryInput>& inputs, OffsetArith& arith);
  void collect_derived(OffsetArith& arith, std::vector<std::pair<TermId, TermId>>& out);
  void save_model_values(OffsetArith& arith);
  std::vector<TermId> definitional_terms();
};

class GroundEngine {
public:
  explicit GroundEngine(TermStore& st) : st_(st) {}

  Answer solve(const std::vector<TermId>& asserts, bool* lost_precision,
               std::unique_ptr<TheoryCheck>* final_check);

private:
  TermStore& st_;
  std::map<TermId, int> var_of_term_;
  std::vector<TermId> term_of_var_;
  std::vector<std::vector<int>> clauses_;
  std::vector<std::vector<int>> occur_;
  std::vector<std::pair<int, int>> watch_pair_;
  std::vector<int> pending_units_;
  std::vector<int8_t> assign_;
  std::vector<int> trail_;
  std::vector<TermId> theory_terms_;
  std::set<TermId> defined_;
  std::set<TermId> collected_;
  int fresh_counter_ = 0;

  static int pos(int v) { return v + 1; }
  static int neg(int v) { return -(v + 1); }
  size_t lit_index(int lit) const
  {
    int v = std::abs(lit) - 1;
    return static_cast<size_t>(v) * 2 + (lit > 0 ? 0 : 1);
  }
  int8_t lit_value(int lit) const
  {
    int8_t v = assign_[std::abs(lit) - 1];
    return lit > 0 ? v : static_cast<int8_t>(-v);
  }
  void set_lit(int lit)
  {
    assign_[std::abs(lit) - 1] = lit > 0 ? 1 : -1;
    trail_.push_back(lit);
  }

  TermId elim_ite(TermId t, std::vector<TermId>& side);
  bool is_theory_atom(TermId t) const;
  int var_for(TermId t);
  int lit_of(TermId t);
  void collect_terms(TermId t);
  void build_occurrence_lists();
  void register_clause(int ci);
  bool propagate(size_t& qhead);
  int find_unsatisfied();  // -1 all satisfied, -2 falsified clause
  std::vector<TheoryInput> current_theory_assignment();
  bool theory_ok(bool* lost_precision, std::unique_ptr<TheoryCheck>* out,
                 bool learn = true, bool* propagated = nullptr);
  size_t scan_pos_ = 0;
  Answer dpll(bool* lost_precision, std::unique_ptr<TheoryCheck>* final_check);
};

}  // namespace capsmt

#endif

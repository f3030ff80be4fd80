// Quantifier saturation and model validation for capsmt.
//
// Instantiation is pattern-driven: each axiom gets a covering set of
// application patterns (preferring predicate atoms in the antecedent and
// constructor applications), matched against the ground term universe to a
// fixpoint. Candidate models from the ground core are then validated against
// the axioms: predicate-guarded axioms hold vacuously off the represented
// universe (predicates default to false), constructor axioms are
// definitional, and the remaining axiom shapes are checked by enumeration
// over the model's represented argument domains; counterexamples are
// instantiated and solving repeats.
#include <algorithm>
#include <cassert>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <memory>
#include <unordered_map>

#include "engine.hpp"
#include "ground.hpp"

namespace capsmt {

namespace {

struct Pattern {
  TermId app;              // application term containing variables
  bool exempting;          // predicate-antecedent or constructor pattern
};

struct AxiomPlan {
  TermId axiom;
  TermId body;
  int nvars = 0;
  std::vector<Pattern> patterns;       // covering set, matched in order
  std::vector<int> fallback_vars;      // vars not covered by any pattern
  bool exempt_from_model_check = true; // all vars covered by exempting patterns
};

class Saturator {
public:
  Saturator(Problem& p, const SolveLimits& limits) : p_(p), st_(p.store), limits_(limits) {}

  Answer run()
  {
    if (p_.unsupported) return Answer::Unknown;
    for (TermId t : p_.ground) add_ground(t);
    for (TermId ax : p_.axioms) plans_.push_back(make_plan(ax));

    bool stats = std::getenv("CAPSMT_STATS") != nullptr;
    auto t0 = std::chrono::steady_clock::now();
    saturate();
    if (const char* dump = std::getenv("CAPSMT_DUMP")) {
      FILE* f = std::fopen(dump, "w");
      if (f) {
        for (TermId g : ground_) std::fprintf(f, "%s\n", render(g).c_str());
        std::fclose(f);
      }
    }
    if (stats)
      std::fprintf(stderr, "[capsmt] saturate: %zu ground, %zu instances, %zu terms, %.1f ms\n",
                   ground_.size(), instance_keys_.size(), st_.term_count(),
                   std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());

    for (int repair = 0; repair <= limits_.max_model_repairs; ++repair) {
      GroundEngine engine(st_);
      bool lost = false;
      std::unique_ptr<TheoryCheck> final_check;
      auto t1 = std::chrono::steady_clock::now();
      Answer a = engine.solve(ground_, &lost, &final_check);
      if (stats)
        std::fprintf(stderr, "[capsmt] ground solve #%d: %s, %.1f ms\n", repair,
                     a == Answer::Unsat ? "unsat" : a == Answer::Sat ? "sat" : "unknown",
                     std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t1).count());
      if (a == Answer::Unsat) return Answer::Unsat;
      if (a == Answer::Unknown) return Answer::Unknown;
      if (!final_check) return Answer::Unknown;
      size_t before = ground_.size();
      validate_model(*final_check);
      if (stats && ground_.size() != before)
        std::fprintf(stderr, "[capsmt] model repair: +%zu instances\n", ground_.size() - before);
      if (ground_.size() == before) {
        if (lost || capped_) return Answer::Unknown;
        return Answer::Sat;
      }
      saturate();
      if (capped_) return Answer::Unknown;
    }
    return Answer::Unknown;
  }

private:
  Problem& p_;
  TermStore& st_;
  SolveLimits limits_;

  std::vector<TermId> ground_;
  std::set<TermId> ground_set_;
  std::set<std::string> instance_keys_;
  std::set<TermId> expanded_;
  std::map<TermId, int> expansion_depth_;
  std::vector<AxiomPlan> plans_;
  bool capped_ = false;

  // term -> contains a Var node
  std::map<TermId, bool> has_var_;

  // May-equal relation over ground terms: terms related by any equality
  // literal (either polarity) anywhere in the ground set. Patterns match
  // modulo this relation so that instances needed through asserted or goal
  // equalities are not missed; the over-approximation only costs instances.
  std::map<TermId, int> may_idx_;
  std::vector<int> may_parent_;

  int may_node(TermId t)
  {
    auto it = may_idx_.find(t);
    if (it != may_idx_.end()) return it->second;
    int n = static_cast<int>(may_parent_.size());
    may_idx_[t] = n;
    may_parent_.push_back(n);
    return n;
  }
  int may_find(int n)
  {
    while (may_parent_[n] != n) {
      may_parent_[n] = may_parent_[may_parent_[n]];
      n = may_parent_[n];
    }
    return n;
  }
  bool may_equal(TermId a, TermId b)
  {
    if (a == b) return true;
    return may_find(may_node(a)) == may_find(may_node(b));
  }

  void rebuild_may_equal()
  {
    may_idx_.clear();
    may_parent_.clear();
    std::vector<TermId> apps;
    std::set<TermId> seen;
    std::function<void(TermId)> walk = [&](TermId t) {
      if (!seen.insert(t).second) return;
      const Term& tt = st_.term(t);
      if (tt.op == Op::Eq && st_.term(tt.args[0]).sort != st_.bool_sort()) {
        int a = may_node(tt.args[0]);
        int b = may_node(tt.args[1]);
        may_parent_[may_find(a)] = may_find(b);
      }
      if (tt.op == Op::App && !tt.args.empty()) {
        may_node(t);
        apps.push_back(t);
      }
      for (TermId a : tt.args) walk(a);
    };
    for (TermId g : ground_) walk(g);
    // Congruence (upward) and constructor decomposition (downward) make the
    // relation usable as an over-approximation of derivable equality.
    bool changed = true;
    while (changed) {
      changed = false;
      std::unordered_map<std::vector<int>, TermId, HashVec> sig;
      for (TermId t : apps) {
        const Term& tt = st_.term(t);
        std::vector<int> key;
        key.reserve(tt.args.size() + 1);
        key.push_back(static_cast<int>(tt.num));
        for (TermId a : tt.args) key.push_back(may_find(may_node(a)));
        auto [it, inserted] = sig.emplace(std::move(key), t);
        if (!inserted) {
          int ra = may_find(may_node(it->second));
          int rb = may_find(may_node(t));
          if (ra != rb) {
            may_parent_[ra] = rb;
            changed = true;
          }
        }
      }
      // Same constructor in one class: arguments align.
      std::map<std::pair<int, long long>, TermId> ctor_rep;
      std::map<int, TermId> ctor_of_class;
      for (TermId t : apps) {
        const Term& tt = st_.term(t);
        const Fn& fn = st_.fn(tt.num);
        if (fn.kind != FnKind::CtorFn) continue;
        int cls = may_find(may_node(t));
        ctor_of_class.emplace(cls, t);
        auto key = std::make_pair(cls, tt.num);
        auto it = ctor_rep.find(key);
        if (it == ctor_rep.end()) {
          ctor_rep.emplace(key, t);
          continue;
        }
        const Term& ot = st_.term(it->second);
        for (size_t i = 0; i < tt.args.size(); ++i) {
          int ra = may_find(may_node(tt.args[i]));
          int rb = may_find(may_node(ot.args[i]));
          if (ra != rb) {
            may_parent_[ra] = rb;
            changed = true;
          }
        }
      }
      // Selector over a class exposing its constructor.
      for (TermId t : apps) {
        const Term& tt = st_.term(t);
        const Fn& fn = st_.fn(tt.num);
        if (fn.kind != FnKind::SelFn) continue;
        int arg_cls = may_find(may_node(tt.args[0]));
        auto it = ctor_of_class.find(arg_cls);
        if (it == ctor_of_class.end()) continue;
        const Term& ct = st_.term(it->second);
        const Fn& cf = st_.fn(ct.num);
        if (cf.datatype != fn.datatype || cf.ctor_index != fn.ctor_index) continue;
        int ra = may_find(may_node(t));
        int rb = may_find(may_node(ct.args[fn.sel_index]));
        if (ra != rb) {
          may_parent_[ra] = rb;
          changed = true;
        }
      }
    }
  }

  bool contains_var(TermId t)
  {
    auto it = has_var_.find(t);
    if (it != has_var_.end()) return it->second;
    const Term& tt = st_.term(t);
    bool v = tt.op == Op::Var;
    for (TermId a : tt.args) v = v || contains_var(a);
    has_var_[t] = v;
    return v;
  }

  void add_ground(TermId t)
  {
    if (ground_set_.insert(t).second) ground_.push_back(t);
  }

  std::string render(TermId t)
  {
    const Term& tt = st_.term(t);
    switch (tt.op) {
      case Op::IntConst: return std::to_string(tt.num);
      case Op::BoolConst: return tt.num ? "true" : "false";
      case Op::Var: return "?" + std::to_string(tt.num);
      case Op::App: {
        std::string s = st_.fn(tt.num).name;
        if (tt.args.empty()) return s;
        s = "(" + s;
        for (TermId a : tt.args) s += " " + render(a);
        return s + ")";
      }
      default: {
        static const char* names[] = {"int","bool","var","app","+","*","and","or",
                                      "not","=>","=","ite","<=","<","forall"};
        std::string s = "(" + std::string(names[static_cast<int>(tt.op)]);
        for (TermId a : tt.args) s += " " + render(a);
        return s + ")";
      }
    }
  }

  // ------------------------------------------------------------------ plans

  AxiomPlan make_plan(TermId axiom)
  {
    AxiomPlan plan;
    plan.axiom = axiom;
    const Term& ax = st_.term(axiom);
    const Quant& q = st_.quants_[ax.num];
    plan.nvars = static_cast<int>(q.var_sorts.size());
    plan.body = ax.args[0];

    // Collect candidate application patterns with their polarity context.
    struct Cand {
      TermId app;
      bool antecedent;  // occurs at negative polarity (can guard vacuous truth)
      bool ctor;
    };
    std::vector<Cand> cands;
    std::set<TermId> seen;
    std::function<void(TermId, int)> walk = [&](TermId t, int polarity) {
      const Term& tt = st_.term(t);
      switch (tt.op) {
        case Op::Not:
          walk(tt.args[0], -polarity);
          return;
        case Op::Implies:
          walk(tt.args[0], -polarity);
          walk(tt.args[1], polarity);
          return;
        case Op::And:
        case Op::Or:
          for (TermId a : tt.args) walk(a, polarity);
          return;
        case Op::Eq:
        case Op::Ite:
        case Op::Le:
        case Op::Lt:
          for (TermId a : tt.args) walk(a, 0);
          return;
        case Op::App: {
          if (contains_var(t) && seen.insert(t).second) {
            const Fn& fn = st_.fn(tt.num);
            bool is_pred_antecedent =
              tt.sort == st_.bool_sort() && polarity < 0 && fn.kind == FnKind::Uninterp;
            cands.push_back({t, is_pred_antecedent, fn.kind == FnKind::CtorFn});
          }
          for (TermId a : tt.args) walk(a, 0);
          return;
        }
        default:
          for (TermId a : tt.args) walk(a, 0);
          return;
      }
    };
    walk(plan.body, 1);

    // Greedy cover: prefer exempting patterns (antecedent predicates and
    // constructor applications), then larger variable sets.
    auto vars_of = [&](TermId t) {
      std::set<int> vars;
      std::function<void(TermId)> go = [&](TermId u) {
        const Term& ut = st_.term(u);
        if (ut.op == Op::Var) vars.insert(static_cast<int>(ut.num));
        for (TermId a : ut.args) go(a);
      };
      go(t);
      return vars;
    };

    std::set<int> covered;
    std::stable_sort(cands.begin(), cands.end(), [&](const Cand& a, const Cand& b) {
      int ra = (a.antecedent || a.ctor) ? 0 : 1;
      int rb = (b.antecedent || b.ctor) ? 0 : 1;
      if (ra != rb) return ra < rb;
      return a.app < b.app;
    });
    for (const Cand& c : cands) {
      std::set<int> vars = vars_of(c.app);
      bool useful = false;
      for (int v : vars) useful = useful || !covered.count(v);
      if (!useful) continue;
      plan.patterns.push_back({c.app, c.antecedent || c.ctor});
      for (int v : vars) covered.insert(v);
      if (static_cast<int>(covered.size()) == plan.nvars) break;
    }
    for (int v = 0; v < plan.nvars; ++v)
      if (!covered.count(v)) plan.fallback_vars.push_back(v);
    for (const Pattern& pat : plan.patterns)
      plan.exempt_from_model_check = plan.exempt_from_model_check && pat.exempting;
    plan.exempt_from_model_check =
      plan.exempt_from_model_check && plan.fallback_vars.empty() && !plan.patterns.empty();
    return plan;
  }

  // ----------------------------------------------------------- saturation

  void saturate()
  {
    bool stats = std::getenv("CAPSMT_STATS") != nullptr;
    for (int round = 0; round < limits_.max_rounds; ++round) {
      size_t before = ground_.size();
      expand_datatypes();
      instantiate_all();
      if (stats)
        std::fprintf(stderr, "[capsmt] round %d: ground %zu -> %zu, terms %zu\n", round,
                     before, ground_.size(), st_.term_count());
      if (capped_ || ground_.size() == before) return;
      if (instance_keys_.size() > limits_.max_instances
          || st_.term_count() > limits_.max_terms) {
        capped_ = true;
        return;
      }
    }
    capped_ = true;
  }

  void index_ground_terms(std::map<FnId, std::vector<TermId>>& by_fn,
                          std::map<SortId, std::vector<TermId>>& by_sort)
  {
    std::set<TermId> seen;
    std::function<void(TermId)> walk = [&](TermId t) {
      if (!seen.insert(t).second) return;
      const Term& tt = st_.term(t);
      if (tt.op == Op::App) by_fn[static_cast<FnId>(tt.num)].push_back(t);
      if (tt.sort != st_.bool_sort() && tt.op != Op::Var) by_sort[tt.sort].push_back(t);
      for (TermId a : tt.args) walk(a);
    };
    for (TermId g : ground_) walk(g);
    for (auto& [fn, v] : by_fn) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    for (auto& [s, v] : by_sort) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
  }

  // Structural match of a pattern with Var leaves against a ground term,
  // modulo the may-equal relation.
  bool match(TermId pat, TermId gnd, std::vector<TermId>& binding)
  {
    const Term& pt = st_.term(pat);
    if (pt.op == Op::Var) {
      TermId& slot = binding[pt.num];
      if (slot >= 0) return slot == gnd || may_equal(slot, gnd);
      slot = gnd;
      return true;
    }
    if (!contains_var(pat)) return pat == gnd || may_equal(pat, gnd);
    const Term& gt = st_.term(gnd);
    if (pt.op != gt.op || pt.num != gt.num || pt.args.size() != gt.args.size())
      return false;
    for (size_t i = 0; i < pt.args.size(); ++i)
      if (!match(pt.args[i], gt.args[i], binding)) return false;
    return true;
  }

  void instantiate_all()
  {
    if (std::getenv("CAPSMT_STATS")) std::fprintf(stderr, "[capsmt] may-equal...\n");
    rebuild_may_equal();
    if (std::getenv("CAPSMT_STATS")) std::fprintf(stderr, "[capsmt] may-equal done\n");
    std::map<FnId, std::vector<TermId>> by_fn;
    std::map<SortId, std::vector<TermId>> by_sort;
    index_ground_terms(by_fn, by_sort);

    const char* dbg = std::getenv("CAPSMT_DEBUG_AXIOM");
    for (size_t pi = 0; pi < plans_.size(); ++pi) {
      AxiomPlan& plan = plans_[pi];
      if (dbg && render(plan.body).find(dbg) != std::string::npos) {
        std::fprintf(stderr, "[capsmt] axiom %zu: %s\n", pi, render(plan.body).c_str());
        for (const Pattern& p : plan.patterns) {
          const Term& app = st_.term(p.app);
          auto it = by_fn.find(static_cast<FnId>(app.num));
          std::fprintf(stderr, "  pattern %s: %zu candidates\n", render(p.app).c_str(),
                       it == by_fn.end() ? 0 : it->second.size());
        }
        std::fprintf(stderr, "  fallback vars: %zu\n", plan.fallback_vars.size());
        // Show candidate lists and their may-classes.
        for (const Pattern& p : plan.patterns) {
          const Term& app = st_.term(p.app);
          auto it = by_fn.find(static_cast<FnId>(app.num));
          if (it == by_fn.end()) continue;
          for (TermId cand : it->second) {
            const Term& ct = st_.term(cand);
            std::string cls;
            for (TermId a : ct.args)
              cls += " " + std::to_string(may_find(may_node(a)));
            std::fprintf(stderr, "    cand %s classes:%s\n", render(cand).c_str(), cls.c_str());
          }
        }
      }
      std::vector<TermId> binding(plan.nvars, -1);
      match_patterns(plan, 0, binding, by_fn, by_sort, pi);
      if (capped_) return;
    }
  }

  void match_patterns(AxiomPlan& plan, size_t pat_idx, std::vector<TermId>& binding,
                      std::map<FnId, std::vector<TermId>>& by_fn,
                      std::map<SortId, std::vector<TermId>>& by_sort, size_t axiom_idx)
  {
    if (capped_) return;
    if (pat_idx == plan.patterns.size()) {
      enumerate_fallbacks(plan, 0, binding, by_sort, axiom_idx);
      return;
    }
    const Pattern& pat = plan.patterns[pat_idx];
    const Term& app = st_.term(pat.app);
    auto it = by_fn.find(static_cast<FnId>(app.num));
    if (it == by_fn.end()) return;
    for (TermId cand : it->second) {
      std::vector<TermId> saved = binding;
      if (match(pat.app, cand, binding)) {
        match_patterns(plan, pat_idx + 1, binding, by_fn, by_sort, axiom_idx);
      }
      binding = std::move(saved);
      if (capped_) return;
    }
  }

  void enumerate_fallbacks(AxiomPlan& plan, size_t k, std::vector<TermId>& binding,
                           std::map<SortId, std::vector<TermId>>& by_sort,
                           size_t axiom_idx)
  {
    if (capped_) return;
    if (k == plan.fallback_vars.size()) {
      emit_instance(plan, binding, axiom_idx);
      return;
    }
    int v = plan.fallback_vars[k];
    const Term& ax = st_.term(plan.axiom);
    SortId s = st_.quants_[ax.num].var_sorts[static_cast<size_t>(v)];
    auto it = by_sort.find(s);
    if (it == by_sort.end()) return;
    for (TermId cand : it->second) {
      binding[v] = cand;
      enumerate_fallbacks(plan, k + 1, binding, by_sort, axiom_idx);
      binding[v] = -1;
      if (capped_) return;
    }
  }

  void emit_instance(AxiomPlan& plan, const std::vector<TermId>& binding, size_t axiom_idx)
  {
    for (TermId b : binding)
      if (b < 0) return;  // incomplete binding
    std::string key = std::to_string(axiom_idx);
    for (TermId b : binding) {
      key += ':';
      key += std::to_string(b);
    }
    if (!instance_keys_.insert(key).second) return;
    if (instance_keys_.size() > limits_.max_instances) {
      capped_ = true;
      return;
    }
    TermId inst = st_.substitute(plan.body, binding);
    // Ground-level ite elimination happens inside the ground engine.
    add_ground(inst);
  }

  // Every ground term of datatype sort is one of its constructors.
  void expand_datatypes()
  {
    std::map<FnId, std::vector<TermId>> by_fn;
    std::map<SortId, std::vector<TermId>> by_sort;
    index_ground_terms(by_fn, by_sort);
    for (auto& [sort, terms] : by_sort) {
      const Sort& s = st_.sort(sort);
      if (s.kind != SortKind::Datatype) continue;
      const Datatype& dt = st_.datatypes_[s.datatype];
      for (TermId t : terms) {
        if (!expanded_.insert(t).second) continue;
        const Term& tt = st_.term(t);
        if (tt.op == Op::App && st_.fn(tt.num).kind == FnKind::CtorFn) continue;
        int depth = expansion_depth_.count(t) ? expansion_depth_[t] : 0;
        if (depth > 10) {
          capped_ = true;  // recursive datatype; sat answers become unknown
          continue;
        }
        std::vector<TermId> cases;
        for (const Ctor& c : dt.ctors) {
          std::vector<TermId> args;
          for (size_t i = 0; i < c.selectors.size(); ++i) {
            TermId sel = st_.mk_app(c.selectors[i], {t});
            expansion_depth_[sel] = depth + 1;
            args.push_back(sel);
          }
          cases.push_back(
            st_.mk(Op::Eq, st_.bool_sort(), 0, {t, st_.mk_app(c.fn, std::move(args))}));
        }
        add_ground(cases.size() == 1
                     ? cases[0]
                     : st_.mk(Op::Or, st_.bool_sort(), 0, std::move(cases)));
      }
    }
  }

  // --------------------------------------------------------- model checking

  void validate_model(TheoryCheck& check)
  {
    CongruenceClosure& cc = check.cc();

    // Universe per sort: class representatives; integer classes map to
    // concrete values.
    std::map<SortId, std::vector<long long>> universe;
    std::map<long long, TermId> rep_term;       // encoded value -> witness term
    std::map<int, long long> class_value;       // class rep -> encoded value
    const std::map<int, long long>& ints = check.model_int_values();

    long long next_unpinned = 900000000000LL;
    auto encode_class = [&](int rep, SortId sort) -> long long {
      auto it = class_value.find(rep);
      if (it != class_value.end()) return it->second;
      long long v;
      if (sort == st_.int_sort()) {
        auto iv = ints.find(rep);
        int icn = cc.ctor_of_class(rep);
        (void)icn;
        int ic = cc.int_const_of_class(rep);
        if (ic >= 0) {
          v = st_.term(cc.node_term(ic)).num;
        } else if (iv != ints.end()) {
          v = iv->second;
        } else {
          v = next_unpinned++;
        }
      } else {
        v = 1000000000000LL + rep;  // class identity
      }
      class_value[rep] = v;
      if (!rep_term.count(v)) rep_term[v] = cc.node_term(rep);
      return v;
    };

    // Collect classes and function graphs.
    std::map<FnId, std::map<std::vector<long long>, long long>> graphs;
    std::set<int> seen_class;
    for (size_t n = 0; n < cc.node_count(); ++n) {
      TermId t = cc.node_term(static_cast<int>(n));
      const Term& tt = st_.term(t);
      if (tt.sort == st_.bool_sort() && tt.op != Op::App) continue;
      int rep = cc.find(static_cast<int>(n));
      long long val;
      if (tt.sort == st_.bool_sort()) {
        // Predicate truth comes from merges with the boolean constants.
        int tru = cc.find_existing(st_.mk_bool(true));
        val = rep == tru ? 1 : 0;
      } else {
        val = encode_class(rep, tt.sort);
        if (seen_class.insert(rep).second) universe[tt.sort].push_back(val);
      }
      if (tt.op == Op::App) {
        std::vector<long long> args;
        bool ok = true;
        for (TermId a : tt.args) {
          int an = cc.find_existing(a);
          if (an < 0) {
            ok = false;
            break;
          }
          const Term& at = st_.term(a);
          if (at.sort == st_.bool_sort()) {
            int tru = cc.find_existing(st_.mk_bool(true));
            args.push_back(an == tru ? 1 : 0);
          } else {
            args.push_back(encode_class(an, at.sort));
          }
        }
        if (ok) graphs[static_cast<FnId>(tt.num)][args] = val;
      }
    }

    // Evaluator over the finite structure.
    std::map<std::pair<FnId, std::vector<long long>>, long long> ctor_fresh;
    long long fresh_counter = 2000000000000LL;
    std::function<long long(TermId, const std::vector<long long>&)> eval =
      [&](TermId t, const std::vector<long long>& env) -> long long {
      const Term& tt = st_.term(t);
      switch (tt.op) {
        case Op::Var: return env[tt.num];
        case Op::IntConst: return tt.num;
        case Op::BoolConst: return tt.num;
        case Op::App: {
          std::vector<long long> args;
          for (TermId a : tt.args) args.push_back(eval(a, env));
          auto& graph = graphs[static_cast<FnId>(tt.num)];
          auto it = graph.find(args);
          if (it != graph.end()) return it->second;
          const Fn& fn = st_.fn(tt.num);
          if (fn.kind == FnKind::CtorFn) {
            auto key = std::make_pair(static_cast<FnId>(tt.num), args);
            auto cit = ctor_fresh.find(key);
            if (cit != ctor_fresh.end()) return cit->second;
            return ctor_fresh[key] = fresh_counter++;
          }
          if (fn.ret == st_.bool_sort()) return 0;
          if (fn.ret == st_.int_sort()) return 0;
          auto uit = universe.find(fn.ret);
          if (uit != universe.end() && !uit->second.empty()) return uit->second[0];
          return 3000000000000LL + fn.ret;  // lone element of an unpopulated sort
        }
        case Op::Add: {
          long long s = 0;
          for (TermId a : tt.args) s += eval(a, env);
          return s;
        }
        case Op::Mul:
          return st_.term(tt.args[0]).num * eval(tt.args[1], env);
        case Op::And: {
          for (TermId a : tt.args)
            if (!eval(a, env)) return 0;
          return 1;
        }
        case Op::Or: {
          for (TermId a : tt.args)
            if (eval(a, env)) return 1;
          return 0;
        }
        case Op::Not: return eval(tt.args[0], env) ? 0 : 1;
        case Op::Implies:
          return (!eval(tt.args[0], env) || eval(tt.args[1], env)) ? 1 : 0;
        case Op::Eq: return eval(tt.args[0], env) == eval(tt.args[1], env) ? 1 : 0;
        case Op::Ite:
          return eval(tt.args[0], env) ? eval(tt.args[1], env) : eval(tt.args[2], env);
        case Op::Le: return eval(tt.args[0], env) <= eval(tt.args[1], env) ? 1 : 0;
        case Op::Lt: return eval(tt.args[0], env) < eval(tt.args[1], env) ? 1 : 0;
        case Op::Forall: return 1;  // not nested
      }
      return 0;
    };

    // Check non-exempt axioms over the represented argument domains.
    for (const AxiomPlan& plan : plans_) {
      if (plan.exempt_from_model_check) continue;
      const Term& ax = st_.term(plan.axiom);
      const Quant& q = st_.quants_[ax.num];
      // Domain per variable: union of values at matching graph positions.
      std::vector<std::vector<long long>> domains(q.var_sorts.size());
      for (size_t v = 0; v < q.var_sorts.size(); ++v) {
        std::set<long long> dom;
        std::function<void(TermId)> scan = [&](TermId t) {
          const Term& tt = st_.term(t);
          if (tt.op == Op::App) {
            for (size_t i = 0; i < tt.args.size(); ++i) {
              const Term& at = st_.term(tt.args[i]);
              if (at.op == Op::Var && static_cast<size_t>(at.num) == v) {
                for (auto& [args, val] : graphs[static_cast<FnId>(tt.num)])
                  if (i < args.size()) dom.insert(args[i]);
              }
            }
          }
          for (TermId a : tt.args) scan(a);
        };
        scan(plan.body);
        if (dom.empty()) {
          auto uit = universe.find(q.var_sorts[v]);
          if (uit != universe.end())
            for (long long u : uit->second) dom.insert(u);
          if (q.var_sorts[v] == st_.bool_sort()) {
            dom.insert(0);
            dom.insert(1);
          }
        }
        domains[v].assign(dom.begin(), dom.end());
        if (domains[v].empty()) domains[v].push_back(0);
      }
      // Enumerate tuples (bounded).
      size_t total = 1;
      for (auto& d : domains) {
        total *= d.size();
        if (total > 2000000) break;
      }
      if (total > 2000000) {
        capped_ = true;
        continue;
      }
      std::vector<size_t> idx(domains.size(), 0);
      std::vector<long long> env(domains.size());
      for (;;) {
        for (size_t v = 0; v < domains.size(); ++v) env[v] = domains[v][idx[v]];
        if (!eval(plan.body, env)) {
          // Counterexample: instantiate with witness terms.
          std::vector<TermId> binding(domains.size());
          bool ok = true;
          for (size_t v = 0; v < domains.size(); ++v) {
            if (q.var_sorts[v] == st_.int_sort()) {
              binding[v] = st_.mk_int(env[v]);
            } else if (q.var_sorts[v] == st_.bool_sort()) {
              binding[v] = st_.mk_bool(env[v] != 0);
            } else {
              auto it = rep_term.find(env[v]);
              if (it == rep_term.end()) {
                ok = false;
                break;
              }
              binding[v] = it->second;
            }
          }
          if (ok) {
            std::string key = "cex";
            for (TermId b : binding) key += ":" + std::to_string(b);
            if (instance_keys_.insert(key + "@" + std::to_string(plan.axiom)).second)
              add_ground(st_.substitute(plan.body, binding));
          }
        }
        size_t v = 0;
        for (; v < domains.size(); ++v) {
          if (++idx[v] < domains[v].size()) break;
          idx[v] = 0;
        }
        if (v == domains.size()) break;
        if (domains.empty()) break;
      }
      if (domains.empty()) {
        // No variables: nothing to do (cannot happen for well-formed foralls).
      }
    }
  }
};

}  // namespace

Answer solve(Problem& problem, const SolveLimits& limits)
{
  Saturator saturator(problem, limits);
  return saturator.run();
}

}  // namespace capsmt

// Ground decision core: Tseitin encoding, clause-driven DPLL, and a theory
// check combining congruence closure, datatype rules, and offset integer
// arithmetic (x = y + c chains, constant bounds).
#include <algorithm>
#include <cassert>
#include <cstring>
#include <functional>
#include <memory>
#include <unordered_map>

#include "engine.hpp"
#include "ground.hpp"

namespace capsmt {

// ---------------------------------------------------------------------------
// Congruence closure

int CongruenceClosure::add(TermId t)
{
  auto it = node_of_.find(t);
  if (it != node_of_.end()) return it->second;
  const Term& tt = st_.term(t);
  std::vector<int> kids;
  for (TermId a : tt.args) kids.push_back(add(a));
  int n = static_cast<int>(nodes_.size());
  node_of_[t] = n;
  nodes_.push_back(t);
  parent_.push_back(n);
  rank_.push_back(0);
  parents_.emplace_back();
  bool is_ctor = tt.op == Op::App && st_.fn(tt.num).kind == FnKind::CtorFn;
  ctor_node_.push_back(is_ctor ? n : -1);
  int_const_.push_back(tt.op == Op::IntConst ? n : -1);
  for (int k : kids) parents_[k].push_back(n);
  if (!tt.args.empty()) pending_.push_back(n);
  return n;
}

int CongruenceClosure::find(int n)
{
  while (parent_[n] != n) {
    parent_[n] = parent_[parent_[n]];
    n = parent_[n];
  }
  return n;
}

int CongruenceClosure::find_existing(TermId t)
{
  auto it = node_of_.find(t);
  return it == node_of_.end() ? -1 : find(it->second);
}

bool CongruenceClosure::propagate()
{
  while (!conflict_ && (!worklist_.empty() || !pending_.empty())) {
    if (!worklist_.empty()) {
      auto [a, b] = worklist_.back();
      worklist_.pop_back();
      do_merge(a, b);
      continue;
    }
    int n = pending_.back();
    pending_.pop_back();
    signature(n);
    try_eval_selector(n);
  }
  if (conflict_) return false;
  for (auto& [a, b] : diseqs_) {
    if (find(a) == find(b)) {
      conflict_ = true;
      return false;
    }
  }
  return true;
}

// A selector applied to a class that exposes a matching constructor equals
// the corresponding constructor argument.
void CongruenceClosure::try_eval_selector(int n)
{
  const Term& t = st_.term(nodes_[n]);
  if (t.op != Op::App) return;
  const Fn& fn = st_.fn(t.num);
  if (fn.kind != FnKind::SelFn) return;
  int arg_rep = find(node_of_[t.args[0]]);
  int ctor = ctor_node_[arg_rep];
  if (ctor < 0) return;
  const Term& ctor_term = st_.term(nodes_[ctor]);
  const Fn& cf = st_.fn(ctor_term.num);
  if (fn.datatype == cf.datatype && fn.ctor_index == cf.ctor_index)
    worklist_.push_back({n, node_of_[ctor_term.args[fn.sel_index]]});
}

void CongruenceClosure::signature(int n)
{
  const Term& t = st_.term(nodes_[n]);
  std::vector<int> sig;
  sig.reserve(t.args.size() + 2);
  sig.push_back(static_cast<int>(t.op));
  sig.push_back(static_cast<int>(t.num));
  for (TermId a : t.args) sig.push_back(find(node_of_[a]));
  auto [it, inserted] = sig_.emplace(std::move(sig), n);
  if (!inserted && find(it->second) != find(n)) worklist_.push_back({it->second, n});
}

void CongruenceClosure::do_merge(int a, int b)
{
  a = find(a);
  b = find(b);
  if (a == b || conflict_) return;
  if (rank_[a] < rank_[b]) std::swap(a, b);
  if (rank_[a] == rank_[b]) ++rank_[a];
  parent_[b] = a;

  int ca = ctor_node_[a];
  int cb = ctor_node_[b];
  if (ca >= 0 && cb >= 0) {
    const Term& ta = st_.term(nodes_[ca]);
    const Term& tb = st_.term(nodes_[cb]);
    if (ta.num != tb.num) {  // distinct constructors
      conflict_ = true;
      return;
    }
    for (size_t i = 0; i < ta.args.size(); ++i)
      worklist_.push_back({node_of_[ta.args[i]], node_of_[tb.args[i]]});
  }
  if (ca < 0) ctor_node_[a] = cb;

  int ia = int_const_[a];
  int ib = int_const_[b];
  if (ia >= 0 && ib >= 0 && st_.term(nodes_[ia]).num != st_.term(nodes_[ib]).num) {
    conflict_ = true;
    return;
  }
  if (ia < 0) int_const_[a] = ib;

  for (int p : parents_[b]) pending_.push_back(p);
  parents_[a].insert(parents_[a].end(), parents_[b].begin(), parents_[b].end());

  // Selector evaluation once a class exposes its constructor.
  if (ctor_node_[a] >= 0) {
    const Term& ctor_term = st_.term(nodes_[ctor_node_[a]]);
    const Fn& cf = st_.fn(ctor_term.num);
    for (int p : parents_[a]) {
      const Term& pt = st_.term(nodes_[p]);
      if (pt.op != Op::App) continue;
      const Fn& pf = st_.fn(pt.num);
      if (pf.kind != FnKind::SelFn) continue;
      if (find(node_of_[pt.args[0]]) != a) continue;
      if (pf.datatype == cf.datatype && pf.ctor_index == cf.ctor_index)
        worklist_.push_back({p, node_of_[ctor_term.args[pf.sel_index]]});
    }
  }
}

// ---------------------------------------------------------------------------
// Offset integer arithmetic over congruence classes.

void OffsetArith::ensure(int n)
{
  while (static_cast<int>(parent_.size()) < n) {
    int i = static_cast<int>(parent_.size());
    parent_.push_back(i);
    offset_.push_back(0);
    value_.push_back({});
    lo_.push_back({});
    hi_.push_back({});
  }
}

std::pair<int, long long> OffsetArith::find(int x)
{
  if (parent_[x] == x) return {x, 0};
  auto [r, off] = find(parent_[x]);
  parent_[x] = r;
  offset_[x] += off;
  return {r, offset_[x]};
}

bool OffsetArith::assert_diff(int x, int y, long long c)
{
  auto [rx, ox] = find(x);
  auto [ry, oy] = find(y);
  if (rx == ry) return ox - oy == c;
  parent_[rx] = ry;
  offset_[rx] = c + oy - ox;  // rx = ry + offset
  long long shift = offset_[rx];
  if (value_[rx]) {
    if (!set_value_root(ry, *value_[rx] + shift)) return false;
    value_[rx] = {};
  }
  if (lo_[rx]) {
    if (!add_lo_root(ry, *lo_[rx] + shift)) return false;
    lo_[rx] = {};
  }
  if (hi_[rx]) {
    if (!add_hi_root(ry, *hi_[rx] + shift)) return false;
    hi_[rx] = {};
  }
  return true;
}

bool OffsetArith::assert_value(int x, long long v)
{
  auto [r, off] = find(x);
  return set_value_root(r, v - off);
}

bool OffsetArith::assert_upper(int x, long long c)
{
  auto [r, off] = find(x);
  return add_hi_root(r, c - off);
}

bool OffsetArith::assert_lower(int x, long long c)
{
  auto [r, off] = find(x);
  return add_lo_root(r, c - off);
}

bool OffsetArith::diff_known(int x, int y, long long& out)
{
  auto [rx, ox] = find(x);
  auto [ry, oy] = find(y);
  if (rx == ry) {
    out = ox - oy;
    return true;
  }
  if (value_[rx] && value_[ry]) {
    out = (*value_[rx] + ox) - (*value_[ry] + oy);
    return true;
  }
  return false;
}

std::optional<long long> OffsetArith::value_of(int x)
{
  auto [r, off] = find(x);
  if (value_[r]) return *value_[r] + off;
  if (lo_[r] && hi_[r] && *lo_[r] == *hi_[r]) return *lo_[r] + off;
  return {};
}

bool OffsetArith::set_value_root(int r, long long v)
{
  if (value_[r] && *value_[r] != v) return false;
  value_[r] = v;
  if (lo_[r] && v < *lo_[r]) return false;
  if (hi_[r] && v > *hi_[r]) return false;
  return true;
}
bool OffsetArith::add_lo_root(int r, long long v)
{
  if (!lo_[r] || *lo_[r] < v) lo_[r] = v;
  if (value_[r] && *value_[r] < v) return false;
  if (hi_[r] && *hi_[r] < v) return false;
  return true;
}
bool OffsetArith::add_hi_root(int r, long long v)
{
  if (!hi_[r] || *hi_[r] > v) hi_[r] = v;
  if (value_[r] && *value_[r] > v) return false;
  if (lo_[r] && *lo_[r] > v) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Theory check

bool TheoryCheck::run(const std::vector<TheoryInput>& inputs, bool* lost_precision)
{
  lost_ = false;
  for (TermId t : all_terms_) cc_.add(t);
  cc_.add(st_.mk_bool(true));
  cc_.add(st_.mk_bool(false));
  cc_.add_diseq(st_.mk_bool(true), st_.mk_bool(false));
  for (const TheoryInput& in : inputs) {
    const Term& a = st_.term(in.atom);
    if (a.op == Op::Eq) {
      if (in.value) {
        cc_.merge_terms(a.args[0], a.args[1]);
      } else {
        cc_.add_diseq(a.args[0], a.args[1]);
      }
    } else if (a.op == Op::App) {
      cc_.merge_terms(in.atom, st_.mk_bool(in.value));
    }
  }
  if (!cc_.propagate()) return false;

  for (int round = 0; round < 64; ++round) {
    OffsetArith arith(lost_);
    if (!arith_pass(inputs, arith)) return false;
    std::vector<std::pair<TermId, TermId>> derived;
    collect_derived(arith, derived);
    if (derived.empty()) {
      save_model_values(arith);
      break;
    }
    for (auto& [x, y] : derived) cc_.merge_terms(x, y);
    if (!cc_.propagate()) return false;
  }
  if (lost_precision) *lost_precision = lost_;
  return true;
}

int TheoryCheck::arith_var(int rep, OffsetArith& arith)
{
  auto it = arith_var_.find(rep);
  if (it != arith_var_.end()) return it->second;
  int v = static_cast<int>(arith_rep_.size());
  arith_var_[rep] = v;
  arith_rep_.push_back(rep);
  arith.ensure(v + 1);
  return v;
}

PolyView TheoryCheck::poly_of(TermId t, OffsetArith& arith)
{
  PolyView out;
  const Term& tt = st_.term(t);
  if (tt.op == Op::IntConst) {
    out.constant = tt.num;
    return out;
  }
  if (tt.op == Op::Add) {
    for (TermId a : tt.args) {
      PolyView p = poly_of(a, arith);
      if (!p.linear) out.linear = false;
      out.constant += p.constant;
      for (auto& [v, c] : p.coeffs) out.coeffs[v] += c;
    }
    return out;
  }
  if (tt.op == Op::Mul) {
    long long c = st_.term(tt.args[0]).num;
    PolyView p = poly_of(tt.args[1], arith);
    out.linear = p.linear;
    out.constant = c * p.constant;
    for (auto& [v, k] : p.coeffs) out.coeffs[v] += c * k;
    return out;
  }
  int rep = cc_.find_existing(t);
  if (rep < 0) rep = cc_.find(cc_.add(t));
  int ic = cc_.int_const_of_class(rep);
  if (ic >= 0) {
    out.constant = st_.term(cc_.node_term(ic)).num;
    return out;
  }
  out.coeffs[arith_var(rep, arith)] += 1;
  return out;
}

void TheoryCheck::simplify(PolyView& p, OffsetArith& arith)
{
  PolyView out;
  out.constant = p.constant;
  out.linear = p.linear;
  for (auto& [v, c] : p.coeffs) {
    if (c == 0) continue;
    if (auto val = arith.value_of(v)) {
      out.constant += c * *val;
    } else {
      out.coeffs[v] += c;
    }
  }
  for (auto it = out.coeffs.begin(); it != out.coeffs.end();) {
    if (it->second == 0) {
      it = out.coeffs.erase(it);
    } else {
      ++it;
    }
  }
  p = std::move(out);
}

bool TheoryCheck::assert_poly(PolyView p, Kind kind, OffsetArith& arith)
{
  simplify(p, arith);
  if (!p.linear) {
    lost_ = true;
    return true;
  }
  if (p.coeffs.empty()) {
    if (kind == Kind::Eq) return p.constant == 0;
    if (kind == Kind::Diseq) return p.constant != 0;
    return p.constant <= 0;
  }
  if (p.coeffs.size() == 1) {
    auto [v, c] = *p.coeffs.begin();
    if (kind == Kind::Eq) {
      long long val = -p.constant / c;
      if (val * c != -p.constant) return false;
      return arith.assert_value(v, val);
    }
    if (kind == Kind::Diseq) {
      if (auto val = arith.value_of(v)) return *val * c + p.constant != 0;
      diseq_singles_.push_back({v, c, p.constant});
      return true;
    }
    if (c == 1) return arith.assert_upper(v, -p.constant);
    if (c == -1) return arith.assert_lower(v, p.constant);
    lost_ = true;
    return true;
  }
  if (p.coeffs.size() == 2) {
    auto it = p.coeffs.begin();
    auto [v1, c1] = *it++;
    auto [v2, c2] = *it;
    bool unit = (c1 == 1 && c2 == -1) || (c1 == -1 && c2 == 1);
    if (unit) {
      int a = c1 == 1 ? v1 : v2;
      int b = c1 == 1 ? v2 : v1;
      // a - b + constant ? 0
      if (kind == Kind::Eq) return arith.assert_diff(a, b, -p.constant);
      if (kind == Kind::Diseq) {
        long long d;
        if (arith.diff_known(a, b, d)) return d != -p.constant;
        diseq_pairs_.push_back({a, b, -p.constant});
        return true;
      }
    }
  }
  lost_ = true;  // beyond the offset fragment
  return true;
}

bool TheoryCheck::arith_pass(const std::vector<TheoryInput>& inputs, OffsetArith& arith)
{
  diseq_singles_.clear();
  diseq_pairs_.clear();
  arith_var_.clear();
  arith_rep_.clear();

  // Definitional equations: each sum/product node equals its decomposition.
  for (TermId t : definitional_terms()) {
    PolyView def = poly_of(t, arith);
    PolyView self;
    int rep = cc_.find_existing(t);
    if (rep < 0) rep = cc_.find(cc_.add(t));
    int ic = cc_.int_const_of_class(rep);
    if (ic >= 0) {
      self.constant = st_.term(cc_.node_term(ic)).num;
    } else {
      self.coeffs[arith_var(rep, arith)] += 1;
    }
    PolyView eqp = self;
    eqp.constant -= def.constant;
    eqp.linear = def.linear;
    for (auto& [v, c] : def.coeffs) eqp.coeffs[v] -= c;
    if (!assert_poly(std::move(eqp), Kind::Eq, arith)) return false;
  }

  for (const TheoryInput& in : inputs) {
    const Term& a = st_.term(in.atom);
    if (a.op == Op::Eq && st_.term(a.args[0]).sort == st_.int_sort()) {
      PolyView l = poly_of(a.args[0], arith);
      PolyView r = poly_of(a.args[1], arith);
      PolyView p = l;
      p.constant -= r.constant;
      p.linear = l.linear && r.linear;
      for (auto& [v, c] : r.coeffs) p.coeffs[v] -= c;
      if (!assert_poly(std::move(p), in.value ? Kind::Eq : Kind::Diseq, arith))
        return false;
    } else if (a.op == Op::Le || a.op == Op::Lt) {
      PolyView l = poly_of(a.args[0], arith);
      PolyView r = poly_of(a.args[1], arith);
      PolyView p;
      if (in.value) {
        p = l;
        p.constant -= r.constant;
        for (auto& [v, c] : r.coeffs) p.coeffs[v] -= c;
        if (a.op == Op::Lt) p.constant += 1;
      } else {
        p = r;
        p.constant -= l.constant;
        for (auto& [v, c] : l.coeffs) p.coeffs[v] -= c;
        if (a.op == Op::Le) p.constant += 1;
      }
      p.linear = l.linear && r.linear;
      if (!assert_poly(std::move(p), Kind::Le, arith)) return false;
    }
  }

  for (auto& [v, c, k] : diseq_singles_) {
    if (auto val = arith.value_of(v)) {
      if (*val * c + k == 0) return false;
    }
  }
  for (auto& [x, y, d] : diseq_pairs_) {
    long long got;
    if (arith.diff_known(x, y, got) && got == d) return false;
  }
  return true;
}

void TheoryCheck::collect_derived(OffsetArith& arith,
                                  std::vector<std::pair<TermId, TermId>>& out)
{
  std::map<std::pair<int, long long>, int> seen;
  for (size_t v = 0; v < arith_rep_.size(); ++v) {
    auto [r, off] = arith.find(static_cast<int>(v));
    auto key = std::make_pair(r, off);
    auto it = seen.find(key);
    if (it != seen.end()) {
      int rep_a = arith_rep_[v];
      int rep_b = arith_rep_[static_cast<size_t>(it->second)];
      if (cc_.find(rep_a) != cc_.find(rep_b))
        out.push_back({cc_.node_term(rep_a), cc_.node_term(rep_b)});
    } else {
      seen.emplace(key, static_cast<int>(v));
    }
    if (auto val = arith.value_of(static_cast<int>(v))) {
      TermId num = st_.mk_int(*val);
      int rep = arith_rep_[v];
      int num_rep = cc_.find_existing(num);
      if (num_rep < 0 || cc_.find(rep) != num_rep)
        out.push_back({cc_.node_term(rep), num});
    }
  }
}

void TheoryCheck::save_model_values(OffsetArith& arith)
{
  model_int_values_.clear();
  // Spaced base values for unconstrained roots keep distinct classes
  // distinct without bookkeeping.
  long long spread = 1000003;
  std::map<int, long long> root_base;
  long long next = 7;
  for (size_t v = 0; v < arith_rep_.size(); ++v) {
    auto [r, off] = arith.find(static_cast<int>(v));
    long long base;
    if (auto val = arith.value_of(static_cast<int>(v))) {
      base = *val - off;
    } else {
      auto it = root_base.find(r);
      if (it == root_base.end()) {
        root_base[r] = next * spread;
        ++next;
      }
      base = root_base[r];
    }
    model_int_values_[cc_.find(arith_rep_[v])] = base + off;
  }
}

std::vector<TermId> TheoryCheck::definitional_terms()
{
  std::vector<TermId> out;
  std::set<TermId> seen;
  std::function<void(TermId)> walk = [&](TermId t) {
    if (!seen.insert(t).second) return;
    const Term& tt = st_.term(t);
    if (tt.op == Op::Add || tt.op == Op::Mul) out.push_back(t);
    for (TermId a : tt.args) walk(a);
  };
  for (TermId t : all_terms_) walk(t);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// DPLL engine

Answer GroundEngine::solve(const std::vector<TermId>& asserts, bool* lost_precision,
                           std::unique_ptr<TheoryCheck>* final_check)
{
  std::vector<TermId> flat;
  for (TermId t : asserts) {
    TermId e = elim_ite(t, flat);
    flat.push_back(e);
  }
  for (TermId t : flat) collect_terms(t);

  std::vector<int> top_lits;
  for (TermId t : flat) top_lits.push_back(lit_of(t));
  build_occurrence_lists();
  for (int lit : top_lits) {
    int8_t v = lit_value(lit);
    if (v < 0) return Answer::Unsat;
    if (v == 0) set_lit(lit);
  }
  return dpll(lost_precision, final_check);
}

TermId GroundEngine::elim_ite(TermId t, std::vector<TermId>& side)
{
  const Term tt = st_.term(t);
  if (tt.args.empty()) return t;
  std::vector<TermId> args;
  bool changed = false;
  for (TermId a : tt.args) {
    TermId b = elim_ite(a, side);
    changed = changed || b != a;
    args.push_back(b);
  }
  TermId out = changed ? st_.mk(tt.op, tt.sort, tt.num, args) : t;
  const Term ot = st_.term(out);
  if (ot.op == Op::Ite && ot.sort != st_.bool_sort()) {
    Fn fresh;
    fresh.name = "ite#" + std::to_string(fresh_counter_++);
    fresh.ret = ot.sort;
    FnId f = st_.add_fn(std::move(fresh));
    TermId k = st_.mk_app(f, {});
    TermId c = ot.args[0];
    side.push_back(st_.mk(Op::Implies, st_.bool_sort(), 0,
                          {c, st_.mk(Op::Eq, st_.bool_sort(), 0, {k, ot.args[1]})}));
    side.push_back(
      st_.mk(Op::Implies, st_.bool_sort(), 0,
             {st_.mk(Op::Not, st_.bool_sort(), 0, {c}),
              st_.mk(Op::Eq, st_.bool_sort(), 0, {k, ot.args[2]})}));
    return k;
  }
  return out;
}

bool GroundEngine::is_theory_atom(TermId t) const
{
  const Term& tt = st_.term(t);
  if (tt.op == Op::Eq) return st_.term(tt.args[0]).sort != st_.bool_sort();
  if (tt.op == Op::Le || tt.op == Op::Lt) return true;
  if (tt.op == Op::App) return tt.sort == st_.bool_sort();
  return false;
}

int GroundEngine::var_for(TermId t)
{
  auto it = var_of_term_.find(t);
  if (it != var_of_term_.end()) return it->second;
  int v = static_cast<int>(term_of_var_.size());
  var_of_term_[t] = v;
  term_of_var_.push_back(t);
  assign_.push_back(0);
  return v;
}

int GroundEngine::lit_of(TermId t)
{
  const Term& tt = st_.term(t);
  switch (tt.op) {
    case Op::BoolConst: {
      int v = var_for(t);
      if (defined_.insert(t).second)
        clauses_.push_back({tt.num ? pos(v) : neg(v)});
      return pos(v);
    }
    case Op::Not:
      return -lit_of(tt.args[0]);
    case Op::And: {
      if (defined_.count(t)) return pos(var_of_term_[t]);
      int v = var_for(t);
      defined_.insert(t);
      std::vector<int> all{pos(v)};
      for (TermId a : tt.args) {
        int la = lit_of(a);
        clauses_.push_back({neg(v), la});
        all.push_back(-la);
      }
      clauses_.push_back(all);
      return pos(v);
    }
    case Op::Or: {
      if (defined_.count(t)) return pos(var_of_term_[t]);
      int v = var_for(t);
      defined_.insert(t);
      std::vector<int> all{neg(v)};
      for (TermId a : tt.args) {
        int la = lit_of(a);
        clauses_.push_back({pos(v), -la});
        all.push_back(la);
      }
      clauses_.push_back(all);
      return pos(v);
    }
    case Op::Implies: {
      if (defined_.count(t)) return pos(var_of_term_[t]);
      int v = var_for(t);
      defined_.insert(t);
      int la = lit_of(tt.args[0]);
      int lb = lit_of(tt.args[1]);
      clauses_.push_back({neg(v), -la, lb});
      clauses_.push_back({pos(v), la});
      clauses_.push_back({pos(v), -lb});
      return pos(v);
    }
    case Op::Ite: {
      if (defined_.count(t)) return pos(var_of_term_[t]);
      int v = var_for(t);
      defined_.insert(t);
      int lc = lit_of(tt.args[0]);
      int la = lit_of(tt.args[1]);
      int lb = lit_of(tt.args[2]);
      clauses_.push_back({neg(v), -lc, la});
      clauses_.push_back({neg(v), lc, lb});
      clauses_.push_back({pos(v), -lc, -la});
      clauses_.push_back({pos(v), lc, -lb});
      return pos(v);
    }
    case Op::Eq: {
      if (st_.term(tt.args[0]).sort == st_.bool_sort()) {
        if (defined_.count(t)) return pos(var_of_term_[t]);
        int v = var_for(t);
        defined_.insert(t);
        int la = lit_of(tt.args[0]);
        int lb = lit_of(tt.args[1]);
        clauses_.push_back({neg(v), -la, lb});
        clauses_.push_back({neg(v), la, -lb});
        clauses_.push_back({pos(v), la, lb});
        clauses_.push_back({pos(v), -la, -lb});
        return pos(v);
      }
      return pos(var_for(t));
    }
    default:
      return pos(var_for(t));
  }
}

void GroundEngine::collect_terms(TermId t)
{
  if (!collected_.insert(t).second) return;
  const Term& tt = st_.term(t);
  // Predicate applications join the closure even when unassigned so that
  // congruence can decide them.
  if (tt.sort != st_.bool_sort() || tt.op == Op::App) theory_terms_.push_back(t);
  for (TermId a : tt.args) collect_terms(a);
}

void GroundEngine::build_occurrence_lists()
{
  occur_.assign(term_of_var_.size() * 2, {});
  watch_pair_.assign(clauses_.size(), {-1, -1});
  for (size_t i = 0; i < clauses_.size(); ++i) register_clause(static_cast<int>(i));
}

// Two-watched-literal scheme. occur_ holds, per literal, the clauses
// currently watching it; a clause is revisited only when a watched literal
// becomes false.
void GroundEngine::register_clause(int ci)
{
  std::vector<int>& c = clauses_[static_cast<size_t>(ci)];
  if (static_cast<size_t>(ci) >= watch_pair_.size()) watch_pair_.resize(ci + 1, {-1, -1});
  if (c.empty()) return;
  if (c.size() == 1) {
    pending_units_.push_back(c[0]);
    return;
  }
  // Prefer non-false literals as initial watches.
  int w0 = -1, w1 = -1;
  for (size_t i = 0; i < c.size(); ++i) {
    if (lit_value(c[i]) >= 0) {
      if (w0 < 0) {
        w0 = static_cast<int>(i);
      } else if (w1 < 0) {
        w1 = static_cast<int>(i);
        break;
      }
    }
  }
  if (w0 < 0) w0 = 0;
  if (w1 < 0) w1 = w0 == 0 ? 1 : 0;
  watch_pair_[ci] = {w0, w1};
  occur_[lit_index(c[static_cast<size_t>(w0)])].push_back(ci);
  occur_[lit_index(c[static_cast<size_t>(w1)])].push_back(ci);
}

bool GroundEngine::propagate(size_t& qhead)
{
  while (!pending_units_.empty()) {
    int u = pending_units_.back();
    pending_units_.pop_back();
    int8_t v = lit_value(u);
    if (v < 0) return false;
    if (v == 0) set_lit(u);
  }
  while (qhead < trail_.size()) {
    int lit = trail_[qhead++];
    size_t fidx = lit_index(-lit);  // clauses watching the now-false literal
    std::vector<int>& wl = occur_[fidx];
    size_t keep = 0;
    for (size_t wi = 0; wi < wl.size(); ++wi) {
      int ci = wl[wi];
      std::vector<int>& c = clauses_[static_cast<size_t>(ci)];
      auto& [a, b] = watch_pair_[static_cast<size_t>(ci)];
      int self = c[static_cast<size_t>(a)] == -lit ? a : b;
      int other = self == a ? b : a;
      int other_lit = c[static_cast<size_t>(other)];
      if (lit_value(other_lit) > 0) {
        wl[keep++] = ci;  // satisfied; keep watching
        continue;
      }
      // Find a replacement watch.
      int repl = -1;
      for (size_t i = 0; i < c.size(); ++i) {
        if (static_cast<int>(i) == self || static_cast<int>(i) == other) continue;
        if (lit_value(c[i]) >= 0) {
          repl = static_cast<int>(i);
          break;
        }
      }
      if (repl >= 0) {
        (self == a ? a : b) = repl;
        occur_[lit_index(c[static_cast<size_t>(repl)])].push_back(ci);
        continue;  // watch moved; drop from this list
      }
      // No replacement: unit or conflict on the other watch.
      wl[keep++] = ci;
      int8_t ov = lit_value(other_lit);
      if (ov < 0) {
        // conflict: compact the remainder and fail
        for (size_t rest = wi + 1; rest < wl.size(); ++rest) wl[keep++] = wl[rest];
        wl.resize(keep);
        return false;
      }
      if (ov == 0) set_lit(other_lit);
    }
    wl.resize(keep);
  }
  return true;
}

int GroundEngine::find_unsatisfied()
{
  size_t n = clauses_.size();
  for (size_t step = 0; step < n; ++step) {
    size_t i = (scan_pos_ + step) % n;
    const std::vector<int>& c = clauses_[i];
    bool sat = false;
    bool open = false;
    for (int l : c) {
      int8_t v = lit_value(l);
      if (v > 0) {
        sat = true;
        break;
      }
      if (v == 0) open = true;
    }
    if (!sat && open) {
      scan_pos_ = i;
      return static_cast<int>(i);
    }
    if (!sat && !open) {
      scan_pos_ = i;
      return -2;  // falsified clause (conflict)
    }
  }
  return -1;
}

std::vector<TheoryInput> GroundEngine::current_theory_assignment()
{
  std::vector<TheoryInput> out;
  for (size_t v = 0; v < term_of_var_.size(); ++v) {
    if (assign_[v] == 0) continue;
    TermId t = term_of_var_[v];
    if (is_theory_atom(t)) out.push_back({t, assign_[v] > 0});
  }
  return out;
}

bool GroundEngine::theory_ok(bool* lost_precision, std::unique_ptr<TheoryCheck>* out,
                             bool learn, bool* propagated)
{
  std::vector<TheoryInput> inputs = current_theory_assignment();
  auto check = std::make_unique<TheoryCheck>(st_, theory_terms_);
  bool lost = false;
  if (check->run(inputs, &lost)) {
    if (lost && lost_precision) *lost_precision = true;
    // Theory propagation: equalities and predicate truths that already hold
    // in the congruence closure become assigned literals, so guarded facts
    // fire without search.
    if (propagated) {
      CongruenceClosure& cc = check->cc();
      int true_rep = cc.find_existing(st_.mk_bool(true));
      int false_rep = cc.find_existing(st_.mk_bool(false));
      for (size_t v = 0; v < term_of_var_.size(); ++v) {
        if (assign_[v] != 0) continue;
        TermId t = term_of_var_[v];
        const Term& tt = st_.term(t);
        if (tt.op == Op::Eq && st_.term(tt.args[0]).sort != st_.bool_sort()) {
          int a = cc.find_existing(tt.args[0]);
          int b = cc.find_existing(tt.args[1]);
          if (a >= 0 && a == b) {
            set_lit(pos(static_cast<int>(v)));
            *propagated = true;
          }
        } else if (tt.op == Op::App && tt.sort == st_.bool_sort()) {
          int n = cc.find_existing(t);
          if (n >= 0 && n == true_rep) {
            set_lit(pos(static_cast<int>(v)));
            *propagated = true;
          } else if (n >= 0 && n == false_rep) {
            set_lit(neg(static_cast<int>(v)));
            *propagated = true;
          }
        }
      }
    }
    if (out) *out = std::move(check);
    return true;
  }
  if (!learn) return false;
  // Chunked deletion keeps the number of theory re-runs logarithmic-ish
  // while still shrinking conflict clauses drastically.
  std::vector<TheoryInput> core = inputs;
  int budget = 48;
  size_t chunk = std::max<size_t>(1, core.size() / 2);
  while (chunk >= 1 && budget > 0) {
    bool removed_any = false;
    for (size_t start = 0; start < core.size() && budget > 0; ) {
      std::vector<TheoryInput> trial;
      trial.reserve(core.size());
      size_t end = std::min(core.size(), start + chunk);
      for (size_t j = 0; j < core.size(); ++j)
        if (j < start || j >= end) trial.push_back(core[j]);
      TheoryCheck tc(st_, theory_terms_);
      bool l2 = false;
      --budget;
      if (!trial.empty() && !tc.run(trial, &l2)) {
        core = std::move(trial);
        removed_any = true;
      } else {
        start = end;
      }
    }
    if (chunk == 1) break;
    chunk = removed_any ? chunk : chunk / 2;
  }
  std::vector<int> clause;
  for (const TheoryInput& in : core) {
    int v = var_of_term_.at(in.atom);
    clause.push_back(in.value ? neg(v) : pos(v));
  }
  clauses_.push_back(std::move(clause));
  register_clause(static_cast<int>(clauses_.size() - 1));
  return false;
}

Answer GroundEngine::dpll(bool* lost_precision, std::unique_ptr<TheoryCheck>* final_check)
{
  struct Decision {
    size_t trail_size;
    int lit;
    bool flipped;
  };
  std::vector<Decision> decisions;
  size_t qhead = 0;

  auto undo_to = [&](size_t n) {
    while (trail_.size() > n) {
      assign_[std::abs(trail_.back()) - 1] = 0;
      trail_.pop_back();
    }
    qhead = std::min(qhead, trail_.size());
  };

  auto backtrack = [&]() -> bool {
    while (!decisions.empty() && decisions.back().flipped) {
      undo_to(decisions.back().trail_size);
      decisions.pop_back();
    }
    if (decisions.empty()) return false;
    Decision& d = decisions.back();
    undo_to(d.trail_size);
    d.flipped = true;
    set_lit(-d.lit);
    qhead = trail_.size() - 1;
    return true;
  };

  bool checked_root = false;
  long long since_check = 0;
  long long n_decisions = 0, n_conflicts = 0, n_checks = 0, n_flips = 0;
  bool stats = std::getenv("CAPSMT_STATS") != nullptr;
  auto report = [&] {
    if (stats)
      std::fprintf(stderr,
                   "[capsmt] dpll: %lld decisions, %lld conflicts, %lld checks, %lld flips\n",
                   n_decisions, n_conflicts, n_checks, n_flips);
  };
  for (long long steps = 0;; ++steps) {
    if ((steps & 0xfffff) == 0 && steps > 0) report();
    if (steps > 8000000) {
      report();
      return Answer::Unknown;
    }
    if (!propagate(qhead)) {
      ++n_conflicts;
      if (!backtrack()) return Answer::Unsat;
      ++n_flips;
      continue;
    }
    if (!checked_root && decisions.empty()) {
      // The forced part alone decides most verification goals; a conflict
      // here needs no clause learning. Theory propagation may force more
      // literals, in which case propagation and the check run again.
      bool propagated = false;
      if (!theory_ok(lost_precision, nullptr, /*learn=*/false, &propagated))
        return Answer::Unsat;
      if (propagated) continue;
      checked_root = true;
    }
    int ci = find_unsatisfied();
    if (ci == -2) {
      if (!backtrack()) return Answer::Unsat;
      continue;
    }
    if (ci < 0) {
      bool propagated = false;
      ++n_checks;
      if (theory_ok(lost_precision, final_check, true, &propagated)) {
        if (propagated) continue;  // re-propagate before concluding
        report();
        return Answer::Sat;
      }
      ++n_conflicts;
      if (!backtrack()) return Answer::Unsat;
      continue;
    }
    if (++since_check >= 64) {
      since_check = 0;
      bool propagated = false;
      ++n_checks;
      if (!theory_ok(lost_precision, nullptr, true, &propagated)) {
        ++n_conflicts;
        if (!backtrack()) return Answer::Unsat;
        continue;
      }
    }
    const std::vector<int>& c = clauses_[static_cast<size_t>(ci)];
    int pick = 0;
    for (int l : c) {
      if (lit_value(l) == 0) {
        pick = l;
        break;
      }
    }
    ++n_decisions;
    decisions.push_back({trail_.size(), pick, false});
    set_lit(pick);
  }
}

Answer solve_ground(Problem& problem, const std::vector<TermId>& ground)
{
  GroundEngine engine(problem.store);
  bool lost = false;
  Answer a = engine.solve(ground, &lost, nullptr);
  if (a == Answer::Sat && lost) return Answer::Unknown;
  return a;
}

}  // namespace capsmt

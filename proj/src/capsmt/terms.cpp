// Term store and SMT-LIB 2 script parsing for capsmt.
#include <algorithm>
#include <cassert>

#include "engine.hpp"

namespace capsmt {

TermStore::TermStore()
{
  add_sort("Bool", SortKind::Bool);
  add_sort("Int", SortKind::Int);
}

SortId TermStore::add_sort(const std::string& name, SortKind kind)
{
  auto it = sort_names_.find(name);
  if (it != sort_names_.end()) return it->second;
  SortId id = static_cast<SortId>(sorts_.size());
  sorts_.push_back({kind, name, -1});
  sort_names_[name] = id;
  return id;
}

SortId TermStore::find_sort(const std::string& name) const
{
  auto it = sort_names_.find(name);
  return it == sort_names_.end() ? -1 : it->second;
}

FnId TermStore::add_fn(Fn fn)
{
  auto it = fn_names_.find(fn.name);
  if (it != fn_names_.end()) return it->second;
  FnId id = static_cast<FnId>(fns_.size());
  fn_names_[fn.name] = id;
  fns_.push_back(std::move(fn));
  return id;
}

FnId TermStore::find_fn(const std::string& name) const
{
  auto it = fn_names_.find(name);
  return it == fn_names_.end() ? -1 : it->second;
}

std::string TermStore::key(Op op, SortId sort, long long num,
                           const std::vector<TermId>& args) const
{
  std::string k;
  k.reserve(16 + args.size() * 4);
  k += std::to_string(static_cast<int>(op));
  k += ':';
  k += std::to_string(sort);
  k += ':';
  k += std::to_string(num);
  for (TermId a : args) {
    k += ',';
    k += std::to_string(a);
  }
  return k;
}

TermId TermStore::mk(Op op, SortId sort, long long num, std::vector<TermId> args)
{
  // Light normalization keeping syntactic determinism.
  if (op == Op::Not && !args.empty()) {
    const Term& t = terms_[args[0]];
    if (t.op == Op::BoolConst) return mk_bool(t.num == 0);
    if (t.op == Op::Not) return t.args[0];
  }
  if (op == Op::Add) {
    // Fold constants and flatten nested sums into a canonical spine.
    std::vector<TermId> flat;
    long long c = 0;
    for (TermId a : args) {
      const Term& t = terms_[a];
      if (t.op == Op::IntConst) {
        c += t.num;
      } else if (t.op == Op::Add) {
        for (TermId b : t.args) {
          const Term& bt = terms_[b];
          if (bt.op == Op::IntConst) {
            c += bt.num;
          } else {
            flat.push_back(b);
          }
        }
      } else {
        flat.push_back(a);
      }
    }
    if (c != 0 || flat.empty()) flat.push_back(mk_int(c));
    if (flat.size() == 1) return flat[0];
    if (flat != args) return mk(Op::Add, sort, 0, std::move(flat));
    args = std::move(flat);
  }
  if (op == Op::Mul && args.size() == 2) {
    const Term& c = terms_[args[0]];
    assert(c.op == Op::IntConst);
    if (c.num == 1) return args[1];
    const Term& x = terms_[args[1]];
    if (x.op == Op::IntConst) return mk_int(c.num * x.num);
  }
  if (op == Op::Eq && args.size() == 2 && args[0] == args[1]) return mk_bool(true);
  if (op == Op::Eq && args.size() == 2 && args[0] > args[1]) std::swap(args[0], args[1]);

  std::string k = key(op, sort, num, args);
  auto it = hash_.find(k);
  if (it != hash_.end()) return it->second;
  TermId id = static_cast<TermId>(terms_.size());
  terms_.push_back({op, sort, num, std::move(args)});
  hash_[k] = id;
  return id;
}

TermId TermStore::mk_app(FnId fn, std::vector<TermId> args)
{
  return mk(Op::App, fns_[fn].ret, fn, std::move(args));
}

TermId TermStore::substitute(TermId body, const std::vector<TermId>& binding)
{
  const Term t = term(body);
  if (t.op == Op::Var) {
    assert(t.num >= 0 && t.num < (long long)binding.size());
    return binding[t.num];
  }
  if (t.args.empty()) return body;
  std::vector<TermId> args;
  args.reserve(t.args.size());
  bool changed = false;
  for (TermId a : t.args) {
    TermId s = substitute(a, binding);
    changed = changed || s != a;
    args.push_back(s);
  }
  if (!changed) return body;
  return mk(t.op, t.sort, t.num, std::move(args));
}

// ---------------------------------------------------------------------------
// Script parsing

namespace {

class ScriptParser {
public:
  explicit ScriptParser(Problem& p) : p_(p), st_(p.store) {}

  void run(const std::string& text)
  {
    std::vector<SExpr> forms;
    try {
      forms = read_script(text);
    } catch (const ParseError& e) {
      unsupported(std::string("parse error: ") + e.what());
      return;
    }
    for (const SExpr& f : forms) {
      if (p_.unsupported) return;
      top(f);
    }
  }

private:
  Problem& p_;
  TermStore& st_;

  void unsupported(const std::string& why)
  {
    p_.unsupported = true;
    if (p_.unsupported_reason.empty()) p_.unsupported_reason = why;
  }

  void top(const SExpr& f)
  {
    if (f.is_atom || f.size() == 0 || !f[0].is_atom) return;
    const std::string& head = f[0].atom;
    if (head == "set-logic" || head == "set-info" || head == "set-option"
        || head == "check-sat" || head == "exit" || head == "get-model"
        || head == "push" || head == "pop")
      return;
    if (head == "declare-sort") {
      st_.add_sort(f[1].atom, SortKind::Uninterp);
      return;
    }
    if (head == "declare-datatypes") {
      declare_datatypes(f);
      return;
    }
    if (head == "declare-fun") {
      Fn fn;
      fn.name = f[1].atom;
      for (const SExpr& s : f[2].items) fn.params.push_back(sort_of(s));
      fn.ret = sort_of(f[3]);
      st_.add_fn(std::move(fn));
      return;
    }
    if (head == "declare-const") {
      Fn fn;
      fn.name = f[1].atom;
      fn.ret = sort_of(f[2]);
      st_.add_fn(std::move(fn));
      return;
    }
    if (head == "define-fun") {
      define_fun(f);
      return;
    }
    if (head == "assert") {
      std::vector<std::pair<std::string, TermId>> env;
      TermId t = build(f[1], env, nullptr);
      if (p_.unsupported) return;
      add_assert(t);
      return;
    }
    unsupported("unsupported command " + head);
  }

  void add_assert(TermId t)
  {
    const Term& tt = st_.term(t);
    if (tt.op == Op::Forall) {
      p_.axioms.push_back(t);
    } else {
      p_.ground.push_back(t);
    }
  }

  SortId sort_of(const SExpr& s)
  {
    if (!s.is_atom) {
      unsupported("parametric sorts");
      return st_.bool_sort();
    }
    if (s.atom == "Bool") return st_.bool_sort();
    if (s.atom == "Int") return st_.int_sort();
    SortId id = st_.find_sort(s.atom);
    if (id < 0) {
      unsupported("unknown sort " + s.atom);
      return st_.bool_sort();
    }
    return id;
  }

  void declare_datatypes(const SExpr& f)
  {
    // (declare-datatypes ((Name 0) ...) ((ctors...) ...))
    const SExpr& names = f[1];
    const SExpr& bodies = f[2];
    std::vector<SortId> sorts;
    for (const SExpr& n : names.items) {
      SortId s = st_.add_sort(n[0].atom, SortKind::Datatype);
      st_.sorts_[s].kind = SortKind::Datatype;
      sorts.push_back(s);
    }
    for (size_t i = 0; i < sorts.size(); ++i) {
      SortId s = sorts[i];
      int dt = static_cast<int>(st_.datatypes_.size());
      st_.datatypes_.push_back({});
      st_.datatypes_.back().sort = s;
      st_.sorts_[s].datatype = dt;
      for (const SExpr& c : bodies[i].items) {
        Ctor ctor;
        ctor.name = c.is_atom ? c.atom : c[0].atom;
        Fn cf;
        cf.name = ctor.name;
        cf.kind = FnKind::CtorFn;
        cf.ret = s;
        cf.datatype = dt;
        cf.ctor_index = static_cast<int>(st_.datatypes_[dt].ctors.size());
        std::vector<Fn> sels;
        if (!c.is_atom) {
          for (size_t k = 1; k < c.size(); ++k) {
            const SExpr& selspec = c[k];
            SortId fs = sort_of(selspec[1]);
            cf.params.push_back(fs);
            ctor.arg_sorts.push_back(fs);
            Fn sf;
            sf.name = selspec[0].atom;
            sf.kind = FnKind::SelFn;
            sf.params = {s};
            sf.ret = fs;
            sf.datatype = dt;
            sf.ctor_index = cf.ctor_index;
            sf.sel_index = static_cast<int>(k - 1);
            sels.push_back(std::move(sf));
          }
        }
        ctor.fn = st_.add_fn(std::move(cf));
        for (Fn& sf : sels) ctor.selectors.push_back(st_.add_fn(std::move(sf)));
        st_.datatypes_[dt].ctors.push_back(std::move(ctor));
      }
    }
  }

  void define_fun(const SExpr& f)
  {
    // (define-fun name ((p S)...) R body)
    Fn fn;
    fn.name = f[1].atom;
    fn.kind = FnKind::Defined;
    std::vector<std::pair<std::string, TermId>> env;
    for (const SExpr& p : f[2].items) {
      SortId s = sort_of(p[1]);
      fn.params.push_back(s);
      TermId v = st_.mk(Op::Var, s, static_cast<long long>(env.size()), {});
      env.push_back({p[0].atom, v});
    }
    fn.ret = sort_of(f[3]);
    fn.def_body = build(f[4], env, nullptr);
    st_.add_fn(std::move(fn));
  }

  TermId build(const SExpr& e, std::vector<std::pair<std::string, TermId>>& env,
               const Quant* quant)
  {
    if (p_.unsupported) return st_.mk_bool(true);
    if (e.is_atom) return atom(e.atom, env);
    if (e.size() == 0) {
      unsupported("empty application");
      return st_.mk_bool(true);
    }
    // ((_ is ctor) t)
    if (!e[0].is_atom && e[0].size() == 3 && e[0][0].is("_") && e[0][1].is("is")) {
      TermId t = build(e[1], env, quant);
      return tester(e[0][2].atom, t);
    }
    if (!e[0].is_atom) {
      unsupported("higher-order application");
      return st_.mk_bool(true);
    }
    const std::string& head = e[0].atom;
    if (head == "forall") {
      // Only top-level, un-nested quantifiers are supported.
      Quant q;
      size_t base = env.size();
      for (const SExpr& v : e[1].items) {
        SortId s = sort_of(v[1]);
        q.var_names.push_back(v[0].atom);
        q.var_sorts.push_back(s);
        env.push_back({v[0].atom, st_.mk(Op::Var, s, static_cast<long long>(env.size()), {})});
      }
      if (base != 0) {
        unsupported("nested quantifier");
        return st_.mk_bool(true);
      }
      TermId body = build(e[2], env, &q);
      env.resize(base);
      int qid = static_cast<int>(st_.quants_.size());
      st_.quants_.push_back(std::move(q));
      return st_.mk(Op::Forall, st_.bool_sort(), qid, {body});
    }
    if (head == "exists") {
      unsupported("existential quantifier");
      return st_.mk_bool(true);
    }
    if (head == "let") {
      // (let ((x t)...) body)
      size_t base = env.size();
      for (const SExpr& b : e[1].items) {
        TermId t = build(b[1], env, quant);
        env.push_back({b[0].atom, t});
      }
      TermId body = build(e[2], env, quant);
      env.resize(base);
      return body;
    }

    std::vector<TermId> args;
    for (size_t i = 1; i < e.size(); ++i) args.push_back(build(e[i], env, quant));
    if (p_.unsupported) return st_.mk_bool(true);

    if (head == "and") return st_.mk(Op::And, st_.bool_sort(), 0, std::move(args));
    if (head == "or") return st_.mk(Op::Or, st_.bool_sort(), 0, std::move(args));
    if (head == "not") return st_.mk(Op::Not, st_.bool_sort(), 0, std::move(args));
    if (head == "=>") {
      TermId acc = args.back();
      for (size_t i = args.size() - 1; i-- > 0;)
        acc = st_.mk(Op::Implies, st_.bool_sort(), 0, {args[i], acc});
      return acc;
    }
    if (head == "=") {
      if (args.size() == 2) return st_.mk(Op::Eq, st_.bool_sort(), 0, std::move(args));
      std::vector<TermId> conj;
      for (size_t i = 0; i + 1 < args.size(); ++i)
        conj.push_back(st_.mk(Op::Eq, st_.bool_sort(), 0, {args[i], args[i + 1]}));
      return st_.mk(Op::And, st_.bool_sort(), 0, std::move(conj));
    }
    if (head == "distinct") {
      std::vector<TermId> conj;
      for (size_t i = 0; i < args.size(); ++i)
        for (size_t j = i + 1; j < args.size(); ++j)
          conj.push_back(st_.mk(Op::Not, st_.bool_sort(), 0,
                                {st_.mk(Op::Eq, st_.bool_sort(), 0, {args[i], args[j]})}));
      return st_.mk(Op::And, st_.bool_sort(), 0, std::move(conj));
    }
    if (head == "ite") {
      SortId branch_sort = st_.term(args[1]).sort;
      return st_.mk(Op::Ite, branch_sort, 0, std::move(args));
    }
    if (head == "+") return st_.mk(Op::Add, st_.int_sort(), 0, std::move(args));
    if (head == "-") {
      if (args.size() == 1)
        return st_.mk(Op::Mul, st_.int_sort(), 0, {st_.mk_int(-1), args[0]});
      TermId acc = args[0];
      for (size_t i = 1; i < args.size(); ++i)
        acc = st_.mk(Op::Add, st_.int_sort(), 0,
                     {acc, st_.mk(Op::Mul, st_.int_sort(), 0, {st_.mk_int(-1), args[i]})});
      return acc;
    }
    if (head == "*") {
      if (args.size() != 2) {
        unsupported("n-ary multiplication");
        return st_.mk_bool(true);
      }
      const Term& a = st_.term(args[0]);
      const Term& b = st_.term(args[1]);
      if (a.op == Op::IntConst)
        return st_.mk(Op::Mul, st_.int_sort(), 0, {args[0], args[1]});
      if (b.op == Op::IntConst)
        return st_.mk(Op::Mul, st_.int_sort(), 0, {args[1], args[0]});
      unsupported("nonlinear multiplication");
      return st_.mk_bool(true);
    }
    if (head == "<=") return st_.mk(Op::Le, st_.bool_sort(), 0, std::move(args));
    if (head == "<") return st_.mk(Op::Lt, st_.bool_sort(), 0, std::move(args));
    if (head == ">=")
      return st_.mk(Op::Le, st_.bool_sort(), 0, {args[1], args[0]});
    if (head == ">") return st_.mk(Op::Lt, st_.bool_sort(), 0, {args[1], args[0]});

    FnId fn = st_.find_fn(head);
    if (fn < 0) {
      unsupported("unknown function " + head);
      return st_.mk_bool(true);
    }
    const Fn& decl = st_.fn(fn);
    if (decl.kind == FnKind::Defined) {
      return st_.substitute(decl.def_body, args);
    }
    return st_.mk_app(fn, std::move(args));
  }

  TermId tester(const std::string& ctor_name, TermId t)
  {
    FnId cf = st_.find_fn(ctor_name);
    if (cf < 0) {
      unsupported("unknown constructor " + ctor_name);
      return st_.mk_bool(true);
    }
    const Fn& ctor = st_.fn(cf);
    const Ctor& c = st_.datatypes_[ctor.datatype].ctors[ctor.ctor_index];
    // (_ is C)(t) == (t = C(sel1 t, ..., seln t))
    std::vector<TermId> args;
    for (FnId sel : c.selectors) args.push_back(st_.mk_app(sel, {t}));
    TermId rebuilt = st_.mk_app(cf, std::move(args));
    return st_.mk(Op::Eq, st_.bool_sort(), 0, {t, rebuilt});
  }

  TermId atom(const std::string& a, std::vector<std::pair<std::string, TermId>>& env)
  {
    for (auto it = env.rbegin(); it != env.rend(); ++it)
      if (it->first == a) return it->second;
    if (a == "true") return st_.mk_bool(true);
    if (a == "false") return st_.mk_bool(false);
    if (!a.empty() && (std::isdigit(static_cast<unsigned char>(a[0]))
                       || (a[0] == '-' && a.size() > 1)))
      return st_.mk_int(std::stoll(a));
    FnId fn = st_.find_fn(a);
    if (fn >= 0) {
      const Fn& decl = st_.fn(fn);
      if (decl.kind == FnKind::Defined && decl.params.empty())
        return decl.def_body;
      return st_.mk_app(fn, {});
    }
    unsupported("unknown symbol " + a);
    return st_.mk_bool(true);
  }
};

}  // namespace

Problem parse_script(const std::string& text)
{
  Problem p;
  ScriptParser parser(p);
  parser.run(text);
  return p;
}

}  // namespace capsmt

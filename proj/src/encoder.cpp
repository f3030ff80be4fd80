#include "caplet/encoder.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <sstream>

#include "caplet/printer.hpp"
#include "caplet/smt.hpp"

namespace caplet {

using smt::app;
using smt::eq;
using smt::implies;
using smt::quote;

namespace {

std::string snap_name(const TypeExpr& t) { return quote("snap@" + type_key(t)); }
std::string vsnap_name(const TypeExpr& t) { return quote("vsnap@" + type_key(t)); }
std::string mk_name(const TypeExpr& t) { return quote("mk@" + type_key(t)); }
std::string mkv_name(const TypeExpr& t) { return quote("mkv@" + type_key(t)); }
std::string mem_name(const TypeExpr& t) { return quote("mem@" + type_key(t)); }
std::string cap_name(CapKind k, const TypeExpr& t)
{
  return quote(std::string("cap.") + cap_kind_name(k) + "@" + type_key(t));
}

}  // namespace

std::string mem_sort_name(const TypeExpr& t)
{
  switch (t.kind) {
    case TypeKind::Int: return "Int";
    case TypeKind::Bool: return "Bool";
    case TypeKind::RawPtr: return "Addr";
    default: return snap_name(t);
  }
}

bool contains_ref(const TypeExpr& t, const TypedProgram& prog)
{
  switch (t.kind) {
    case TypeKind::SharedRef:
    case TypeKind::MutRef:
      return true;
    case TypeKind::Int:
    case TypeKind::Bool:
    case TypeKind::RawPtr:   // snapshots stop at raw pointers
    case TypeKind::UnsafeCell:
    case TypeKind::Param:
      return false;
    case TypeKind::Tuple: {
      for (const TypeExpr& a : t.args)
        if (contains_ref(a, prog)) return true;
      return false;
    }
    case TypeKind::Named: {
      std::string key = type_key(t);
      if (const StructInstance* si = prog.find_struct(key)) {
        for (const FieldDecl& f : si->fields)
          if (contains_ref(f.type, prog)) return true;
        return false;
      }
      if (const EnumInstance* ei = prog.find_enum(key)) {
        for (const VariantDecl& v : ei->variants)
          if (v.payload && contains_ref(*v.payload, prog)) return true;
        return false;
      }
      return false;
    }
  }
  return false;
}

std::string SnapVal::str() const
{
  switch (kind) {
    case Int: return "i" + std::to_string(int_val);
    case Bool: return bool_val ? "true" : "false";
    case Addr: return "a" + std::to_string(addr);
    case Ctor: {
      std::string s = ctor + "(";
      for (size_t i = 0; i < args.size(); ++i) {
        if (i) s += ", ";
        s += args[i].str();
      }
      return s + ")";
    }
  }
  return "?";
}

SnapVal mem_to_value(const TypeExpr& t, const SnapVal& mem, const TypedProgram& prog)
{
  switch (t.kind) {
    case TypeKind::Int:
    case TypeKind::Bool:
    case TypeKind::RawPtr:
      return mem;  // identity: values of primitives; a pointer's value is its address
    case TypeKind::UnsafeCell:
      return mem;  // the unit snapshot
    case TypeKind::SharedRef:
    case TypeKind::MutRef: {
      // Drop the address, keep the converted target.
      assert(mem.kind == SnapVal::Ctor && mem.args.size() == 2);
      return mem_to_value(t.args[0], mem.args[1], prog);
    }
    case TypeKind::Tuple: {
      SnapVal out = mem;
      out.args.clear();
      for (size_t i = 0; i < t.args.size(); ++i)
        out.args.push_back(mem_to_value(t.args[i], mem.args[i], prog));
      return out;
    }
    case TypeKind::Named: {
      std::string key = type_key(t);
      if (const StructInstance* si = prog.find_struct(key)) {
        SnapVal out = mem;
        out.args.clear();
        for (size_t i = 0; i < si->fields.size(); ++i)
          out.args.push_back(mem_to_value(si->fields[i].type, mem.args[i], prog));
        return out;
      }
      if (const EnumInstance* ei = prog.find_enum(key)) {
        SnapVal out = mem;
        out.args.clear();
        for (const VariantDecl& v : ei->variants) {
          if (key + "::" + v.name == mem.ctor && v.payload && !mem.args.empty())
            out.args.push_back(mem_to_value(*v.payload, mem.args[0], prog));
        }
        return out;
      }
      return mem;
    }
    case TypeKind::Param:
      return mem;
  }
  return mem;
}

// ---------------------------------------------------------------------------

namespace {

struct BoundTerm {
  std::string term;
  TypeExpr type;
};

struct ECtx {
  std::string ver;      // version for memory reads and unstable calls
  std::string old_ver;  // version used inside old(..)
  // Contract evaluation: parameter/result names bound to snapshot terms.
  const std::map<std::string, BoundTerm>* rebind = nullptr;
  std::string guard;  // guard under which emitted support facts hold ("" = true)
  // Inside a quantified axiom body: no ground support facts may be emitted
  // (they would mention the bound variables); the per-version annotation
  // support instantiates them at concrete addresses instead.
  bool in_axiom = false;
};

class Encoder {
public:
  Encoder(const FunctionInstance& fn, const FlowResult& flow, const TypedProgram& prog,
          const EncodeOptions& opts)
    : fn_(fn), flow_(flow), prog_(prog), opts_(opts)
  {}

  EncodedFunction run()
  {
    collect_var_types();
    collect_frame_types();
    declare_versions_and_guards();
    emit_capability_axioms();
    encode_entry();
    for (const CfgEdge& e : flow_.graph.edges) encode_edge(e);
    std::stable_sort(obligations_.begin(), obligations_.end(),
                     [](const Obligation& a, const Obligation& b) { return a.loc < b.loc; });

    EncodedFunction out;
    out.fn_key = fn_.key;
    out.file = fn_.file;
    out.prelude.push_back("(set-logic ALL)");
    out.prelude.push_back("; function " + fn_.key);
    for (const std::string& s : sort_decls_) out.prelude.push_back(s);
    for (const std::string& s : fun_decls_) out.prelude.push_back(s);
    for (const std::string& s : define_funs_) out.prelude.push_back(s);
    for (const std::string& s : axioms_) out.prelude.push_back(s);
    for (const std::string& s : facts_) out.prelude.push_back(s);
    out.obligations = std::move(obligations_);
    return out;
  }

private:
  const FunctionInstance& fn_;
  const FlowResult& flow_;
  const TypedProgram& prog_;
  const EncodeOptions& opts_;

  std::vector<std::string> sort_decls_;
  std::vector<std::string> fun_decls_;
  std::vector<std::string> define_funs_;
  std::vector<std::string> axioms_;
  std::vector<std::string> facts_;
  std::vector<Obligation> obligations_;

  std::set<std::string> declared_;  // any symbol/sort/axiom dedup key
  std::set<std::string> sorts_in_progress_;

  std::map<std::string, TypeExpr> var_types_;
  std::vector<TypeExpr> frame_types_;       // types framed across transitions
  std::vector<TypeExpr> cap_types_;         // types carrying capability predicates
  std::set<std::string> bare_unique_keys_;  // types granted bare `unique` by annotations

  std::map<int, std::string> point_ver_, point_guard_;
  std::map<int, std::string> edge_ver_, edge_guard_;
  std::map<int, std::string> point_scrutinee_;  // match/let-else evaluation results
  std::map<int, TypeExpr> point_scrutinee_type_;

  [[noreturn]] void fail(Loc loc, const std::string& msg) const
  {
    throw CapletError(fn_.file, loc, msg);
  }

  // ------------------------------------------------------------ type tables

  const StructInstance* struct_of(const TypeExpr& t) const
  {
    return t.kind == TypeKind::Named ? prog_.find_struct(type_key(t)) : nullptr;
  }
  const EnumInstance* enum_of(const TypeExpr& t) const
  {
    return t.kind == TypeKind::Named ? prog_.find_enum(type_key(t)) : nullptr;
  }

  void collect_var_types()
  {
    for (const Param& p : fn_.params) var_types_[p.name] = p.type;
    std::function<void(const std::vector<Stmt>&)> walk = [&](const std::vector<Stmt>& blk) {
      for (const Stmt& s : blk) {
        if (s.kind == StmtKind::Let) var_types_[s.let_name] = s.expr->type;
        if (s.kind == StmtKind::LetElse) {
          const EnumInstance* ei = enum_of(s.expr->type);
          for (const VariantDecl& v : ei->variants)
            if (v.name == s.let_ctor && v.payload) var_types_[s.let_name] = *v.payload;
        }
        if (s.kind == StmtKind::Match) {
          const EnumInstance* ei = enum_of(s.expr->type);
          for (const MatchArm& arm : s.arms) {
            if (!arm.binder) continue;
            for (const VariantDecl& v : ei->variants)
              if (v.name == arm.ctor && v.payload) var_types_[*arm.binder] = *v.payload;
          }
        }
        walk(s.then_block);
        walk(s.else_block);
        for (const MatchArm& arm : s.arms) walk(arm.block);
      }
    };
    walk(*fn_.body);
  }

  void add_type_key(std::map<std::string, TypeExpr>& acc, const TypeExpr& t)
  {
    acc.emplace(type_key(t), t);
  }

  // Closure of root types under structural derivation plus annotation targets.
  void collect_frame_types()
  {
    std::map<std::string, TypeExpr> acc;
    for (const auto& [point, roots] : flow_.roots)
      for (const RootPlace& r : roots) add_type_key(acc, r.type);
    bool changed = true;
    while (changed) {
      changed = false;
      std::map<std::string, TypeExpr> next = acc;
      for (const auto& [key, t] : acc) {
        std::vector<TypeExpr> children;
        if (t.is_ref()) children.push_back(t.args[0]);
        if (t.kind == TypeKind::Tuple)
          for (const TypeExpr& a : t.args) children.push_back(a);
        if (const StructInstance* si = struct_of(t)) {
          for (const FieldDecl& f : si->fields)
            if (f.type.kind != TypeKind::UnsafeCell && f.type.kind != TypeKind::RawPtr)
              children.push_back(f.type);
          for (const TypedAnnotation& ann : si->annotations) {
            // Targets are raw pointers or references; capabilities attach to
            // the pointee.
            TypeExpr tt = ann.target->type;
            if (tt.kind == TypeKind::RawPtr || tt.is_ref()) children.push_back(tt.args[0]);
            if (ann.kind == "unique" && (tt.kind == TypeKind::RawPtr || tt.is_ref()))
              bare_unique_keys_.insert(type_key(tt.args[0]));
          }
        }
        for (const TypeExpr& c : children) {
          if (!next.count(type_key(c))) {
            next.emplace(type_key(c), c);
            changed = true;
          }
        }
      }
      acc = std::move(next);
    }
    for (const auto& [key, t] : acc) cap_types_.push_back(t);
    // Framed types additionally cover every parameter type component.
    std::map<std::string, TypeExpr> frame = acc;
    for (const Param& p : fn_.params) add_type_key(frame, p.type);
    for (const auto& [name, t] : var_types_) add_type_key(frame, t);
    frame_types_.clear();
    for (const auto& [key, t] : frame) frame_types_.push_back(t);
  }

  // ------------------------------------------------------------------- sorts

  void declare_base_sorts()
  {
    if (declared_.insert("sort:base").second) {
      sort_decls_.push_back("(declare-sort Addr 0)");
      sort_decls_.push_back("(declare-sort Ver 0)");
    }
  }

  // Memory snapshot sort; declares the datatype on first use.
  std::string mem_sort(const TypeExpr& t)
  {
    declare_base_sorts();
    std::string name = mem_sort_name(t);
    if (t.kind == TypeKind::Int || t.kind == TypeKind::Bool || t.kind == TypeKind::RawPtr)
      return name;
    std::string key = "sort:" + name;
    if (declared_.count(key)) return name;
    if (!sorts_in_progress_.insert(name).second)
      fail(Loc{}, "recursive type reaches the encoder: " + type_key(t));

    std::vector<std::pair<std::string, std::string>> fields;  // selector, sort
    std::string ctor = mk_name(t);
    std::string decl;
    switch (t.kind) {
      case TypeKind::SharedRef:
      case TypeKind::MutRef: {
        std::string inner = mem_sort(t.args[0]);
        decl = "(declare-datatypes ((" + name + " 0)) (((" + ctor + " ("
               + sel_addr(t) + " Addr) (" + sel_tgt(t) + " " + inner + ")))))";
        break;
      }
      case TypeKind::UnsafeCell: {
        decl = "(declare-datatypes ((" + name + " 0)) (((" + ctor + "))))";
        break;
      }
      case TypeKind::Tuple: {
        std::string body = "(" + ctor;
        for (size_t i = 0; i < t.args.size(); ++i) {
          std::string fs = mem_sort(t.args[i]);
          body += " (" + sel_field(t, std::to_string(i)) + " " + fs + ")";
        }
        body += ")";
        decl = "(declare-datatypes ((" + name + " 0)) ((" + body + ")))";
        break;
      }
      case TypeKind::Named: {
        if (const StructInstance* si = struct_of(t)) {
          std::string body = "(" + ctor;
          for (const FieldDecl& f : si->fields) {
            std::string fs = mem_sort(f.type);
            body += " (" + sel_field(t, f.name) + " " + fs + ")";
          }
          body += ")";
          decl = "(declare-datatypes ((" + name + " 0)) ((" + body + ")))";
        } else if (const EnumInstance* ei = enum_of(t)) {
          std::string body;
          for (const VariantDecl& v : ei->variants) {
            body += "(" + mk_variant(t, v.name);
            if (v.payload)
              body += " (" + sel_payload(t, v.name) + " " + mem_sort(*v.payload) + ")";
            body += ")";
          }
          decl = "(declare-datatypes ((" + name + " 0)) ((" + body + ")))";
        } else {
          fail(Loc{}, "unknown type instance " + type_key(t));
        }
        break;
      }
      default:
        fail(Loc{}, "no snapshot sort for " + type_key(t));
    }
    sorts_in_progress_.erase(name);
    declared_.insert(key);
    sort_decls_.push_back(decl);
    return name;
  }

  static std::string sel_addr(const TypeExpr& ref) { return quote("addr@" + type_key(ref)); }
  static std::string sel_tgt(const TypeExpr& ref) { return quote("tgt@" + type_key(ref)); }
  static std::string sel_field(const TypeExpr& t, const std::string& f)
  {
    return quote("sel@" + type_key(t) + "." + f);
  }
  static std::string mk_variant(const TypeExpr& t, const std::string& v)
  {
    return quote("mk@" + type_key(t) + "::" + v);
  }
  static std::string sel_payload(const TypeExpr& t, const std::string& v)
  {
    return quote("sel@" + type_key(t) + "::" + v);
  }

  // Value snapshot sort. Coincides with the memory sort when the type
  // contains no references.
  std::string val_sort(const TypeExpr& t)
  {
    if (t.is_ref()) return val_sort(t.args[0]);
    if (!contains_ref(t, prog_)) return mem_sort(t);
    std::string name = vsnap_name(t);
    std::string key = "sort:" + name;
    if (declared_.count(key)) return name;
    declared_.insert(key);
    mem_sort(t);  // components first
    std::string decl;
    if (t.kind == TypeKind::Tuple) {
      std::string body = "(" + mkv_name(t);
      for (size_t i = 0; i < t.args.size(); ++i)
        body += " (" + vsel_field(t, std::to_string(i)) + " " + val_sort(t.args[i]) + ")";
      body += ")";
      decl = "(declare-datatypes ((" + name + " 0)) ((" + body + ")))";
    } else if (const StructInstance* si = struct_of(t)) {
      std::string body = "(" + mkv_name(t);
      for (const FieldDecl& f : si->fields)
        body += " (" + vsel_field(t, f.name) + " " + val_sort(f.type) + ")";
      body += ")";
      decl = "(declare-datatypes ((" + name + " 0)) ((" + body + ")))";
    } else if (const EnumInstance* ei = enum_of(t)) {
      std::string body;
      for (const VariantDecl& v : ei->variants) {
        body += "(" + quote("mkv@" + type_key(t) + "::" + v.name);
        if (v.payload)
          body += " (" + quote("vsel@" + type_key(t) + "::" + v.name) + " "
                  + val_sort(*v.payload) + ")";
        body += ")";
      }
      decl = "(declare-datatypes ((" + name + " 0)) ((" + body + ")))";
    } else {
      fail(Loc{}, "no value snapshot sort for " + type_key(t));
    }
    sort_decls_.push_back(decl);
    return name;
  }

  static std::string vsel_field(const TypeExpr& t, const std::string& f)
  {
    return quote("vsel@" + type_key(t) + "." + f);
  }

  // toval function symbol with its defining axioms (per constructor).
  std::string toval_fn(const TypeExpr& t)
  {
    std::string name = quote("toval@" + type_key(t));
    std::string key = "fn:" + name;
    if (declared_.count(key)) return name;
    declared_.insert(key);
    std::string ms = mem_sort(t);
    std::string vs = val_sort(t);
    fun_decls_.push_back("(declare-fun " + name + " (" + ms + ") " + vs + ")");

    auto emit_def = [&](const std::string& ctor_term, const std::string& val_term,
                        const std::vector<std::pair<std::string, std::string>>& vars) {
      std::string body = eq(app(name, {ctor_term}), val_term);
      axioms_.push_back("; toval " + type_key(t));
      axioms_.push_back("(assert " + (vars.empty() ? body : smt::forall(vars, body)) + ")");
    };

    if (t.kind == TypeKind::Tuple || struct_of(t)) {
      std::vector<std::pair<std::string, std::string>> vars;
      std::vector<std::string> margs, vargs;
      std::vector<TypeExpr> field_types;
      if (t.kind == TypeKind::Tuple) {
        field_types = t.args;
      } else {
        for (const FieldDecl& f : struct_of(t)->fields) field_types.push_back(f.type);
      }
      for (size_t i = 0; i < field_types.size(); ++i) {
        std::string v = "x" + std::to_string(i);
        vars.push_back({v, mem_sort(field_types[i])});
        margs.push_back(v);
        vargs.push_back(valize(field_types[i], v));
      }
      emit_def(app(mk_name(t), margs), app(mkv_name(t), vargs), vars);
    } else if (const EnumInstance* ei = enum_of(t)) {
      for (const VariantDecl& v : ei->variants) {
        if (v.payload) {
          std::vector<std::pair<std::string, std::string>> vars = {
            {"x0", mem_sort(*v.payload)}};
          emit_def(app(mk_variant(t, v.name), {"x0"}),
                   app(quote("mkv@" + type_key(t) + "::" + v.name),
                       {valize(*v.payload, "x0")}),
                   vars);
        } else {
          emit_def(mk_variant(t, v.name), quote("mkv@" + type_key(t) + "::" + v.name), {});
        }
      }
    }
    return name;
  }

  // Value-snapshot view of a memory-snapshot term.
  std::string valize(const TypeExpr& t, const std::string& term)
  {
    if (t.is_ref()) {
      mem_sort(t);
      return valize(t.args[0], app(sel_tgt(t), {term}));
    }
    if (!contains_ref(t, prog_)) return term;
    return app(toval_fn(t), {term});
  }

  // ---------------------------------------------------------- memory symbols

  std::string mem_fn(const TypeExpr& t)
  {
    std::string name = mem_name(t);
    std::string key = "fn:" + name;
    if (!declared_.count(key)) {
      declared_.insert(key);
      std::string s = mem_sort(t);
      fun_decls_.push_back("(declare-fun " + name + " (Addr Ver) " + s + ")");
      if (t.is_ref()) emit_ref_coherence(t);
    }
    return name;
  }

  // The stored target snapshot of a reference agrees with the memory at the
  // stored address, at every version.
  void emit_ref_coherence(const TypeExpr& ref)
  {
    std::string key = "coh:" + type_key(ref);
    if (!declared_.insert(key).second) return;
    std::string m = mem_name(ref);
    std::string mi = mem_fn(ref.args[0]);
    std::string stored = app(m, {"a", "w"});
    std::string addr = app(sel_addr(ref), {stored});
    std::string body = eq(stored, app(mk_name(ref), {addr, app(mi, {addr, "w"})}));
    axioms_.push_back("; coherence " + type_key(ref));
    axioms_.push_back(
      "(assert " + smt::forall({{"a", "Addr"}, {"w", "Ver"}}, body) + ")");
  }

  std::string cap_fn(CapKind k, const TypeExpr& t)
  {
    std::string name = cap_name(k, t);
    std::string key = "fn:" + name;
    if (!declared_.count(key)) {
      declared_.insert(key);
      declare_base_sorts();
      fun_decls_.push_back("(declare-fun " + name + " (Int Addr Ver) Bool)");
    }
    return name;
  }

  std::string addr_const(const std::string& var)
  {
    std::string name = quote("addr@" + var);
    if (declared_.insert("const:" + name).second) {
      declare_base_sorts();
      fun_decls_.push_back("(declare-const " + name + " Addr)");
    }
    return name;
  }

  std::string fresh_addr(const std::string& hint)
  {
    std::string name = quote("tgt@" + hint);
    if (declared_.insert("const:" + name).second)
      fun_decls_.push_back("(declare-const " + name + " Addr)");
    return name;
  }

  std::string offset_fn(const TypeExpr& owner, const std::string& field)
  {
    std::string name = quote("off@" + type_key(owner) + "." + field);
    if (declared_.insert("fn:" + name).second) {
      declare_base_sorts();
      fun_decls_.push_back("(declare-fun " + name + " (Addr) Addr)");
      axioms_.push_back("; offset injective " + type_key(owner) + "." + field);
      axioms_.push_back("(assert "
                        + smt::forall({{"a", "Addr"}, {"b", "Addr"}},
                                      implies(eq(app(name, {"a"}), app(name, {"b"})),
                                              eq("a", "b")))
                        + ")");
      axioms_.push_back("(assert "
                        + smt::forall({{"a", "Addr"}},
                                      smt::not_(eq(app(name, {"a"}), "a")))
                        + ")");
      // Distinct from sibling fields declared so far.
      for (const std::string& other : offset_names_[type_key(owner)]) {
        axioms_.push_back("; offset siblings " + type_key(owner));
        axioms_.push_back("(assert "
                          + smt::forall({{"a", "Addr"}},
                                        smt::not_(eq(app(name, {"a"}), app(other, {"a"}))))
                          + ")");
      }
      offset_names_[type_key(owner)].push_back(name);
    }
    return name;
  }
  std::map<std::string, std::vector<std::string>> offset_names_;

  // -------------------------------------------------------- versions, guards

  void declare_versions_and_guards()
  {
    declare_base_sorts();
    for (const ProgramPoint& p : flow_.graph.points) {
      std::string v = "v" + std::to_string(p.id);
      point_ver_[p.id] = v;
      fun_decls_.push_back("(declare-const " + v + " Ver)");
      std::string g = "gp" + std::to_string(p.id);
      point_guard_[p.id] = g;
      fun_decls_.push_back("(declare-const " + g + " Bool)");
    }
    for (const CfgEdge& e : flow_.graph.edges) {
      std::string g = "ge" + std::to_string(e.id);
      edge_guard_[e.id] = g;
      fun_decls_.push_back("(declare-const " + g + " Bool)");
      if (e.kind != EdgeKind::Plumbing) {
        std::string t = "t" + std::to_string(e.id);
        edge_ver_[e.id] = t;
        fun_decls_.push_back("(declare-const " + t + " Ver)");
      }
    }
    facts_.push_back("; guards");
    facts_.push_back("(assert (= " + point_guard_[flow_.graph.entry] + " true))");
    // Non-branch edge guards equal their source point guard; branch guards
    // are defined when the edge is encoded (they need the condition).
    for (const CfgEdge& e : flow_.graph.edges) {
      if (e.kind != EdgeKind::Branch)
        facts_.push_back("(assert (= " + edge_guard_[e.id] + " "
                         + point_guard_[e.from] + "))");
    }
    // Point guards: disjunction of incoming edge guards.
    for (const ProgramPoint& p : flow_.graph.points) {
      if (p.id == flow_.graph.entry) continue;
      std::vector<std::string> in;
      for (const CfgEdge& e : flow_.graph.edges)
        if (e.to == p.id) in.push_back(edge_guard_[e.id]);
      facts_.push_back("(assert (= " + point_guard_[p.id] + " " + smt::or_(in) + "))");
    }
  }

  // ----------------------------------------------------------------- axioms

  bool rule_enabled(const char* rule) const
  {
    return !opts_.disabled_frame_rules.count(rule);
  }

  void emit_capability_axioms()
  {
    for (const TypeExpr& t : cap_types_) {
      // Implication axioms, one per lattice edge.
      for (const CapEdge& e : base_edges().implications) {
        axioms_.push_back("; implication " + std::string(cap_kind_name(e.from)) + "->"
                          + cap_kind_name(e.to) + " @ " + type_key(t));
        axioms_.push_back(
          "(assert "
          + smt::forall({{"r", "Int"}, {"a", "Addr"}, {"w", "Ver"}},
                        implies(app(cap_fn(e.from, t), {"r", "a", "w"}),
                                app(cap_fn(e.to, t), {"r", "a", "w"})))
          + ")");
      }
      // Non-aliasing: incompatible capabilities at one address share a root.
      for (const auto& [k1, k2] : base_edges().incompatibilities) {
        axioms_.push_back("; incompatible " + std::string(cap_kind_name(k1)) + "/"
                          + cap_kind_name(k2) + " @ " + type_key(t));
        axioms_.push_back(
          "(assert "
          + smt::forall(
              {{"r1", "Int"}, {"r2", "Int"}, {"a", "Addr"}, {"w", "Ver"}},
              implies(smt::and_({app(cap_fn(k1, t), {"r1", "a", "w"}),
                                 app(cap_fn(k2, t), {"r2", "a", "w"})}),
                      eq("r1", "r2")))
          + ")");
      }
      // Structural rules.
      emit_structural_axioms(t);
      // Library annotations.
      if (const StructInstance* si = struct_of(t)) emit_annotation_axioms(t, *si);
    }
  }

  void emit_structural_axioms(const TypeExpr& t)
  {
    std::vector<std::string> fields;
    if (const StructInstance* si = struct_of(t)) {
      for (const FieldDecl& f : si->fields) fields.push_back(f.name);
    } else if (t.kind == TypeKind::Tuple) {
      for (size_t i = 0; i < t.args.size(); ++i) fields.push_back(std::to_string(i));
    }
    for (CapKind k : kAllCapKinds) {
      for (const StructuralChild& child : structural_children(k, t, fields)) {
        TypeExpr child_type;
        std::string child_addr;
        if (child.projection.kind == Projection::Deref) {
          child_type = t.args[0];
          child_addr = app(sel_addr(t), {app(mem_fn(t), {"a", "w"})});
        } else {
          if (const StructInstance* si = struct_of(t)) {
            for (const FieldDecl& f : si->fields)
              if (f.name == child.projection.field) child_type = f.type;
          } else {
            child_type = t.args[std::stoul(child.projection.field)];
          }
          if (child_type.kind == TypeKind::UnsafeCell || child_type.kind == TypeKind::RawPtr)
            continue;  // snapshots and capabilities stop here
          child_addr = app(offset_fn(t, child.projection.field), {"a"});
        }
        axioms_.push_back("; structural " + std::string(cap_kind_name(k)) + " @ "
                          + type_key(t) + " -> " + type_key(child_type));
        axioms_.push_back(
          "(assert "
          + smt::forall({{"r", "Int"}, {"a", "Addr"}, {"w", "Ver"}},
                        implies(app(cap_fn(k, t), {"r", "a", "w"}),
                                app(cap_fn(child.kind, child_type),
                                    {"r", child_addr, "w"})))
          + ")");
      }
    }
  }

  void emit_annotation_axioms(const TypeExpr& t, const StructInstance& si)
  {
    for (size_t i = 0; i < si.annotations.size(); ++i) {
      const TypedAnnotation& ann = si.annotations[i];
      CapKind target_kind;
      bool ok = cap_kind_from_name(ann.kind, target_kind);
      assert(ok);
      (void)ok;
      CapKind recv_kind = ann.mut_receiver ? CapKind::WriteRef : CapKind::ReadRef;
      TypeExpr recv_type = ann.mut_receiver ? type_mut_ref(t) : type_shared_ref(t);
      std::string self_term =
        app(mk_name(recv_type), {"a", app(mem_fn(t), {"a", "w"})});
      mem_sort(recv_type);

      ECtx ctx;
      ctx.ver = "w";
      ctx.old_ver = "w";
      ctx.in_axiom = true;
      std::map<std::string, BoundTerm> rebind;
      rebind["self"] = {self_term, recv_type};
      ctx.rebind = &rebind;

      TypeExpr target_pointee = ann.target->type.args[0];
      std::string target_addr = enc(*ann.target, ctx);
      std::vector<std::string> lhs = {app(cap_fn(recv_kind, t), {"r", "a", "w"})};
      if (ann.cond) lhs.push_back(enc(*ann.cond, ctx));
      axioms_.push_back("; annotation " + type_key(t) + " #" + std::to_string(i) + " "
                        + ann.kind);
      axioms_.push_back(
        "(assert "
        + smt::forall({{"r", "Int"}, {"a", "Addr"}, {"w", "Ver"}},
                      implies(smt::and_(lhs),
                              app(cap_fn(target_kind, target_pointee),
                                  {"r", target_addr, "w"})))
        + ")");
    }
  }

  // ------------------------------------------------------------ expressions

  struct PlaceTerm {
    std::string addr;  // empty when the place is rebind-rooted (snapshot walk)
    std::string term;
    TypeExpr type;
  };

  PlaceTerm enc_place(const Place& place, const ECtx& ctx)
  {
    PlaceTerm cur;
    if (ctx.rebind && ctx.rebind->count(place.base)) {
      const BoundTerm& b = ctx.rebind->at(place.base);
      cur.addr = "";
      cur.term = b.term;
      cur.type = b.type;
      for (const Projection& p : place.projs) {
        if (p.kind == Projection::Deref) {
          // Pure-value bindings are already peeled to the target type; a
          // dereference over them is the identity.
          if (!cur.type.is_ref()) continue;
          mem_sort(cur.type);
          cur.term = app(sel_tgt(cur.type), {cur.term});
          cur.type = cur.type.args[0];
        } else {
          mem_sort(cur.type);
          cur.term = app(sel_field(cur.type, p.field), {cur.term});
          cur.type = field_type(cur.type, p.field);
        }
      }
      return cur;
    }
    auto it = var_types_.find(place.base);
    if (it == var_types_.end()) fail(place.loc, "unknown variable '" + place.base + "'");
    cur.addr = addr_const(place.base);
    cur.type = it->second;
    cur.term = app(mem_fn(cur.type), {cur.addr, ctx.ver});
    for (const Projection& p : place.projs) {
      if (p.kind == Projection::Deref) {
        cur.addr = app(sel_addr(cur.type), {cur.term});
        cur.type = cur.type.args[0];
        cur.term = app(mem_fn(cur.type), {cur.addr, ctx.ver});
      } else {
        cur.addr = app(offset_fn(cur.type, p.field), {cur.addr});
        cur.type = field_type(cur.type, p.field);
        cur.term = app(mem_fn(cur.type), {cur.addr, ctx.ver});
      }
    }
    return cur;
  }

  TypeExpr field_type(const TypeExpr& owner, const std::string& field)
  {
    if (owner.kind == TypeKind::Tuple) return owner.args[std::stoul(field)];
    const StructInstance* si = struct_of(owner);
    for (const FieldDecl& f : si->fields)
      if (f.name == field) return f.type;
    fail(Loc{}, "unknown field " + field + " of " + type_key(owner));
  }

  std::string enc(const Expr& e, const ECtx& ctx)
  {
    switch (e.kind) {
      case ExprKind::IntLit: return smt::num(e.int_val);
      case ExprKind::BoolLit: return e.bool_val ? "true" : "false";
      case ExprKind::UnitLit: {
        mem_sort(type_unit());
        return mk_name(type_unit());
      }
      case ExprKind::Result: {
        assert(ctx.rebind && ctx.rebind->count("result"));
        return ctx.rebind->at("result").term;
      }
      case ExprKind::Old: {
        ECtx inner = ctx;
        inner.ver = ctx.old_ver;
        return enc(*e.args[0], inner);
      }
      case ExprKind::PlaceRead: return enc_place(e.place, ctx).term;
      case ExprKind::AddrOf: {
        PlaceTerm p = enc_place(e.place, ctx);
        TypeExpr rt = e.addr_mut ? type_mut_ref(p.type) : type_shared_ref(p.type);
        mem_sort(rt);
        // A borrow of a snapshot-bound place (a contract parameter) has no
        // concrete address; pure-value consumers drop it and the rest only
        // get weaker facts.
        std::string addr = p.addr.empty()
                             ? fresh_addr("specref." + std::to_string(ghost_refs_++))
                             : p.addr;
        return app(mk_name(rt), {addr, p.term});
      }
      case ExprKind::Unary: {
        std::string x = enc(*e.args[0], ctx);
        if (e.op == "!") return smt::not_(x);
        return "(- " + x + ")";
      }
      case ExprKind::Binary: return enc_binary(e, ctx);
      case ExprKind::Cast: {
        std::string x = enc(*e.args[0], ctx);
        const TypeExpr& src = e.args[0]->type;
        if (src.is_ref()) {
          mem_sort(src);
          return app(sel_addr(src), {x});
        }
        return x;  // pointer-to-pointer casts do not change the address
      }
      case ExprKind::DerefBuiltin: {
        std::string p = enc(*e.args[0], ctx);
        return app(mem_fn(e.type), {p, ctx.ver});
      }
      case ExprKind::DerefValue: {
        if (e.args[0]->kind == ExprKind::PlaceRead) {
          Place p = e.args[0]->place;
          p.projs.push_back({Projection::Deref, ""});
          return enc_place(p, ctx).term;
        }
        std::string x = enc(*e.args[0], ctx);
        const TypeExpr& rt = e.args[0]->type;
        mem_sort(rt);
        return app(sel_tgt(rt), {x});
      }
      case ExprKind::Ctor: {
        TypeExpr t = e.type;
        mem_sort(t);
        size_t sep = e.resolved.rfind("::");
        std::string variant = e.resolved.substr(sep + 2);
        if (e.args.empty()) return mk_variant(t, variant);
        return app(mk_variant(t, variant), {enc(*e.args[0], ctx)});
      }
      case ExprKind::Call: return enc_pure_call(e, ctx);
      case ExprKind::MethodCall:
        fail(e.loc, "unresolved method call reached the encoder");
    }
    fail(e.loc, "unsupported expression in encoding");
  }

  std::string enc_binary(const Expr& e, const ECtx& ctx)
  {
    const std::string& op = e.op;
    std::string a = enc(*e.args[0], ctx);
    std::string b = enc(*e.args[1], ctx);
    if (op == "&&") return smt::and_({a, b});
    if (op == "||") return smt::or_({a, b});
    if (op == "==>") return implies(a, b);
    if (op == "+") return app("+", {a, b});
    if (op == "-") return app("-", {a, b});
    if (op == "*") return app("*", {a, b});
    if (op == "<") return app("<", {a, b});
    if (op == "<=") return app("<=", {a, b});
    if (op == ">") return app(">", {a, b});
    if (op == ">=") return app(">=", {a, b});
    if (op == "====") return eq(a, b);
    const TypeExpr& t = e.args[0]->type;
    std::string lhs = valize(t, a);
    std::string rhs = valize(t, b);
    if (op == "==") return eq(lhs, rhs);
    return smt::not_(eq(lhs, rhs));  // !=
  }

  // Argument adaptation for contract/pure-call parameter passing: the value
  // provided for a parameter of type `param` given an argument expression
  // term of type `argt`.
  std::string adapt_arg(const TypeExpr& param, const TypeExpr& argt,
                        const std::string& term, const ECtx& ctx, Loc loc)
  {
    if (param == argt) return term;
    // &mut where & is expected: reuse address and target.
    if (param.kind == TypeKind::SharedRef && argt.kind == TypeKind::MutRef
        && param.args[0] == argt.args[0]) {
      mem_sort(param);
      mem_sort(argt);
      return app(mk_name(param),
                 {app(sel_addr(argt), {term}), app(sel_tgt(argt), {term})});
    }
    // Raw pointer where a reference is expected (specs): rebuild the pointee
    // from memory at the pointer's address.
    if (param.kind == TypeKind::SharedRef && argt.kind == TypeKind::RawPtr
        && param.args[0] == argt.args[0]) {
      mem_sort(param);
      return app(mk_name(param), {term, app(mem_fn(param.args[0]), {term, ctx.ver})});
    }
    // Value where a reference is expected (specs, pure-value callees only).
    if (param.kind == TypeKind::SharedRef && param.args[0] == argt) {
      fail(loc, "a value may stand for a reference only in pure-value positions");
    }
    fail(loc, "cannot adapt argument of type " + type_key(argt) + " to parameter type "
                + type_key(param));
  }

  std::string enc_pure_call(const Expr& e, const ECtx& ctx)
  {
    const FunctionInstance* fi = prog_.find_function(e.resolved);
    if (!fi) fail(e.loc, "unresolved call in encoding");
    if (fi->purity == Purity::None)
      fail(e.loc, "impure call '" + fi->key + "' in expression position");

    // Encode arguments at mem-snapshot level first.
    std::vector<std::string> raw;
    for (const ExprPtr& a : e.args) raw.push_back(enc(*a, ctx));

    std::vector<std::string> args;
    std::vector<std::string> param_sorts;
    std::string fname = quote("fn@" + fi->key);
    for (size_t i = 0; i < fi->params.size(); ++i) {
      const TypeExpr& pt = fi->params[i].type;
      const TypeExpr& at = e.args[i]->type;
      if (fi->purity == Purity::Value) {
        // Pure-value functions consume value snapshots; a value standing for
        // a reference needs no address at all.
        std::string term = raw[i];
        TypeExpr t = at;
        if (pt.kind == TypeKind::SharedRef && at.kind == TypeKind::RawPtr
            && pt.args[0] == at.args[0]) {
          term = adapt_arg(pt, at, raw[i], ctx, e.loc);
          t = pt;
        }
        if (pt.is_ref() && !at.is_ref() && pt.args[0] == at) {
          // val(&T) = val(T): pass the value snapshot directly.
          t = at;
        }
        args.push_back(valize(t, term));
        param_sorts.push_back(val_sort(pt));
      } else {
        std::string term = pt == at ? raw[i] : adapt_arg(pt, at, raw[i], ctx, e.loc);
        args.push_back(term);
        param_sorts.push_back(mem_sort(pt));
      }
    }
    if (fi->purity == Purity::Unstable) {
      args.push_back(ctx.ver);
      param_sorts.push_back("Ver");
    }

    std::string ret_sort =
      fi->purity == Purity::Value ? val_sort(fi->ret) : mem_sort(fi->ret);
    if (fi->purity == Purity::Value && contains_ref(fi->ret, prog_))
      fail(e.loc, "pure-value functions with reference-bearing results are not encodable");

    std::string term;
    if (fi->body && fi->purity != Purity::None) {
      term = app(define_pure_body(*fi, param_sorts, ret_sort), args);
    } else {
      if (declared_.insert("fn:" + fname).second) {
        std::string sig = "(declare-fun " + fname + " (";
        for (size_t i = 0; i < param_sorts.size(); ++i)
          sig += (i ? " " : "") + param_sorts[i];
        sig += ") " + ret_sort + ")";
        fun_decls_.push_back(sig);
      }
      term = app(fname, args);
      if (!ctx.in_axiom) {
        instantiate_contract_facts(*fi, e, raw, term, ctx);
        emit_result_coherence(fi->ret, term, ctx.ver);
      }
    }
    return term;
  }

  // Assumes the (requires-guarded) ensures of a trusted pure function at
  // this application, once per distinct application term.
  void instantiate_contract_facts(const FunctionInstance& fi, const Expr& call,
                                  const std::vector<std::string>& raw_args,
                                  const std::string& result_term, const ECtx& ctx)
  {
    if (fi.ensures_.empty() && fi.requires_.empty()) return;
    std::string cache = "pure:" + fi.key + "|" + result_term;
    if (!declared_.insert(cache).second) return;

    std::map<std::string, BoundTerm> rebind;
    for (size_t i = 0; i < fi.params.size(); ++i) {
      const TypeExpr& pt = fi.params[i].type;
      const TypeExpr& at = call.args[i]->type;
      std::string term = raw_args[i];
      TypeExpr bound_type = at;
      if (pt != at) {
        if (pt.kind == TypeKind::SharedRef && pt.args[0] == at && fi.purity == Purity::Value) {
          // Value bound where the contract expects a reference: contract
          // place projections start with a Deref, which the snapshot walk
          // realizes as the target selector; bind the value as the target.
          // Synthesize a reference snapshot with an unconstrained address.
          // Pure-value contracts never look at it.
          std::string ghost_addr = fresh_addr("specref." + std::to_string(ghost_refs_++));
          mem_sort(pt);
          term = app(mk_name(pt), {ghost_addr, term});
          bound_type = pt;
        } else {
          term = adapt_arg(pt, at, term, ctx, call.loc);
          bound_type = pt;
        }
      }
      rebind[fi.params[i].name] = {term, bound_type};
    }
    rebind["result"] = {result_term, fi.ret};

    ECtx inner = ctx;
    inner.rebind = &rebind;
    std::vector<std::string> pre;
    for (const ExprPtr& r : fi.requires_) pre.push_back(enc(*r, inner));
    for (const ExprPtr& en : fi.ensures_) {
      std::string body = enc(*en, inner);
      std::string fact = pre.empty() ? body : implies(smt::and_(pre), body);
      facts_.push_back("; pure contract " + fi.key);
      facts_.push_back("(assert " + fact + ")");
    }
  }
  int ghost_refs_ = 0;

  // A reference-typed result is a snapshot observed at `ver`: its stored
  // target agrees with the memory at its stored address.
  void emit_result_coherence(const TypeExpr& t, const std::string& term,
                             const std::string& ver)
  {
    if (!t.is_ref()) return;
    std::string key = "rescoh:" + term + "@" + ver;
    if (!declared_.insert(key).second) return;
    mem_sort(t);
    std::string addr = app(sel_addr(t), {term});
    facts_.push_back("; result coherence");
    facts_.push_back("(assert "
                     + eq(term, app(mk_name(t),
                                    {addr, app(mem_fn(t.args[0]), {addr, ver})}))
                     + ")");
    // Nested references would chain here; the corpus stops at one level.
  }

  std::string define_pure_body(const FunctionInstance& fi,
                               const std::vector<std::string>& param_sorts,
                               const std::string& ret_sort)
  {
    std::string fname = quote("fn@" + fi.key);
    if (!declared_.insert("fn:" + fname).second) return fname;
    for (const Param& p : fi.params) {
      TypeExpr peeled = p.type;
      while (peeled.is_ref()) peeled = peeled.args[0];
      if (contains_ref(peeled, prog_) && fi.purity == Purity::Value)
        fail(fi.loc, "bodied pure function '" + fi.key
                       + "' has reference-bearing parameters; not encodable");
    }

    // Body restricted to a single tail expression or a two-arm match.
    const std::vector<Stmt>& body = *fi.body;
    std::map<std::string, BoundTerm> rebind;
    std::string params;
    for (size_t i = 0; i < fi.params.size(); ++i) {
      std::string sym = "p" + std::to_string(i);
      params += (i ? " (" : "(") + sym + " " + param_sorts[i] + ")";
      // Pure-value parameters of reference type are value snapshots of the
      // target; bind them at the target type so Deref is the identity.
      TypeExpr bt = fi.params[i].type;
      if (fi.purity == Purity::Value)
        while (bt.is_ref()) bt = bt.args[0];
      rebind[fi.params[i].name] = {sym, bt};
    }
    ECtx ctx;
    ctx.ver = "vpure";
    ctx.old_ver = "vpure";
    ctx.rebind = &rebind;

    std::string body_term = encode_pure_block(body, fi, ctx);
    define_funs_.push_back("(define-fun " + fname + " (" + params + ") " + ret_sort + " "
                           + body_term + ")");
    return fname;
  }

  std::string encode_pure_block(const std::vector<Stmt>& body, const FunctionInstance& fi,
                                const ECtx& ctx)
  {
    if (body.size() != 1)
      fail(fi.loc, "bodied pure function '" + fi.key
                     + "' must be a single return or match");
    const Stmt& s = body[0];
    if (s.kind == StmtKind::Return && s.expr) return enc_pure_value(*s.expr, fi, ctx);
    if (s.kind == StmtKind::ExprStmt) return enc_pure_value(*s.expr, fi, ctx);
    if (s.kind == StmtKind::Match) {
      const TypeExpr scrut_type = deref_type(s.expr->type, fi);
      const EnumInstance* ei = prog_.find_enum(type_key(scrut_type));
      if (!ei || s.arms.size() != 2)
        fail(s.loc, "pure match must cover a two-variant enum");
      std::string scrut = enc_pure_value(*s.expr, fi, ctx);
      auto arm_term = [&](const MatchArm& arm) -> std::string {
        std::map<std::string, BoundTerm> rebind =
          ctx.rebind ? *ctx.rebind : std::map<std::string, BoundTerm>{};
        if (arm.binder) {
          for (const VariantDecl& v : ei->variants) {
            if (v.name == arm.ctor && v.payload) {
              std::string sel =
                fi.purity == Purity::Value && contains_ref(scrut_type, prog_)
                  ? quote("vsel@" + type_key(scrut_type) + "::" + v.name)
                  : sel_payload(scrut_type, v.name);
              TypeExpr bt = *v.payload;
              rebind[*arm.binder] = {app(sel, {scrut}), bt};
            }
          }
        }
        ECtx inner = ctx;
        inner.rebind = &rebind;
        if (arm.block.size() != 1)
          fail(arm.loc, "pure match arms must be single expressions");
        const Stmt& arm_stmt = arm.block[0];
        if (arm_stmt.kind != StmtKind::Return && arm_stmt.kind != StmtKind::ExprStmt)
          fail(arm.loc, "pure match arms must be single expressions");
        return enc(*arm_stmt.expr, inner);
      };
      const MatchArm* first = &s.arms[0];
      const MatchArm* second = &s.arms[1];
      std::string test;
      if (first->ctor != "_") {
        std::string ctor =
          fi.purity == Purity::Value && contains_ref(scrut_type, prog_)
            ? quote("mkv@" + type_key(scrut_type) + "::" + first->ctor)
            : mk_variant(scrut_type, first->ctor);
        test = smt::is_ctor(ctor, scrut);
      } else {
        std::swap(first, second);
        std::string ctor = mk_variant(scrut_type, first->ctor);
        test = smt::is_ctor(ctor, scrut);
      }
      return "(ite " + test + " " + arm_term(*first) + " " + arm_term(*second) + ")";
    }
    fail(s.loc, "unsupported pure function body");
  }

  TypeExpr deref_type(const TypeExpr& t, const FunctionInstance& fi)
  {
    TypeExpr out = t;
    if (fi.purity == Purity::Value)
      while (out.is_ref()) out = out.args[0];
    return out;
  }

  std::string enc_pure_value(const Expr& e, const FunctionInstance& fi, const ECtx& ctx)
  {
    (void)fi;
    return enc(e, ctx);
  }

  // ------------------------------------------------------------------ entry

  void encode_entry()
  {
    std::string v0 = point_ver_[flow_.graph.entry];
    facts_.push_back("; parameters");
    for (const Param& p : fn_.params) init_param(p.type, addr_const(p.name), p.name, v0);
    ECtx ctx;
    ctx.ver = v0;
    ctx.old_ver = v0;
    for (const ExprPtr& r : fn_.requires_) {
      facts_.push_back("; requires of " + fn_.key);
      facts_.push_back("(assert " + implies(point_guard_[flow_.graph.entry], enc(*r, ctx))
                       + ")");
    }
  }

  void init_param(const TypeExpr& t, const std::string& addr, const std::string& hint,
                  const std::string& ver)
  {
    if (!t.is_ref()) return;
    std::string tgt = fresh_addr(hint);
    mem_sort(t);
    facts_.push_back("(assert "
                     + eq(app(mem_fn(t), {addr, ver}),
                          app(mk_name(t), {tgt, app(mem_fn(t.args[0]), {tgt, ver})}))
                     + ")");
    init_param(t.args[0], tgt, hint + ".t", ver);
  }

  // ------------------------------------------------------------------ edges

  void encode_edge(const CfgEdge& e)
  {
    std::string g = edge_guard_[e.id];
    std::string pre = point_ver_[e.from];
    std::string post = point_ver_[e.to];

    if (e.kind == EdgeKind::Plumbing) {
      for (const TypeExpr& t : frame_types_) {
        axioms_.push_back("; plumb e" + std::to_string(e.id) + " " + type_key(t));
        axioms_.push_back(
          "(assert "
          + smt::forall({{"a", "Addr"}},
                        implies(g, eq(app(mem_fn(t), {"a", pre}),
                                      app(mem_fn(t), {"a", post}))))
          + ")");
      }
      return;
    }

    std::string trans = edge_ver_[e.id];
    // The transition starts from the pre-state: conditional capabilities
    // evaluate their conditions there.
    for (const TypeExpr& t : frame_types_) {
      axioms_.push_back("; transmem e" + std::to_string(e.id) + " " + type_key(t));
      axioms_.push_back("(assert "
                        + smt::forall({{"a", "Addr"}},
                                      implies(g, eq(app(mem_fn(t), {"a", trans}),
                                                    app(mem_fn(t), {"a", pre}))))
                        + ")");
    }

    // Seeds: explicit capabilities held across the statement.
    if (flow_.seeds.count(e.id)) {
      for (const SeededRoot& seed : flow_.seeds.at(e.id)) {
        CapKind k = seed.held_kind == ExplicitKind::ReadRef ? CapKind::ReadRef
                                                            : CapKind::WriteRef;
        facts_.push_back("; seed e" + std::to_string(e.id) + " " + seed.root.var
                         + (seed.unused ? " (unused)" : " (held)"));
        facts_.push_back("(assert "
                         + implies(g, app(cap_fn(k, seed.root.type),
                                          {smt::num(seed.root.root_id),
                                           addr_const(seed.root.var), trans}))
                         + ")");
      }
    }

    // Framing axioms by rule and statement class.
    emit_framing(e, g, trans, pre, post);

    // Annotation support at the transition.
    instantiate_annotation_support(e.from, trans);

    // Statement semantics.
    switch (e.kind) {
      case EdgeKind::Statement: encode_statement(e, g, pre, post); break;
      case EdgeKind::Branch: encode_branch(e, g, pre, post); break;
      case EdgeKind::Interference:
      default: break;
    }

    // Explicit capabilities also hold at the post point for its roots.
    emit_point_caps(e.to);
    emit_point_caps(e.from);
    instantiate_annotation_support(e.from, pre);
    instantiate_annotation_support(e.to, post);
  }

  void emit_point_caps(int point)
  {
    std::string key = "pointcaps:" + std::to_string(point);
    if (!declared_.insert(key).second) return;
    if (!flow_.roots.count(point)) return;
    std::string g = point_guard_[point];
    std::string v = point_ver_[point];
    for (const RootPlace& r : flow_.roots.at(point)) {
      CapKind k = r.kind == ExplicitKind::ReadRef ? CapKind::ReadRef : CapKind::WriteRef;
      facts_.push_back("; root p" + std::to_string(point) + " " + r.var);
      facts_.push_back("(assert "
                       + implies(g, app(cap_fn(k, r.type),
                                        {smt::num(r.root_id), addr_const(r.var), v}))
                       + ")");
    }
  }

  void emit_framing(const CfgEdge& e, const std::string& g, const std::string& trans,
                    const std::string& pre, const std::string& post)
  {
    auto frame_eq = [&](const TypeExpr& t) {
      return eq(app(mem_fn(t), {"a", pre}), app(mem_fn(t), {"a", post}));
    };
    for (const TypeExpr& t : cap_types_) {
      // Rule 1: immutable frames across any statement, including
      // interference.
      if (rule_enabled(kFrameImmutable)) {
        axioms_.push_back("; frame immutable e" + std::to_string(e.id) + " " + type_key(t));
        axioms_.push_back(
          "(assert "
          + smt::forall({{"r", "Int"}, {"a", "Addr"}},
                        implies(smt::and_({g, app(cap_fn(CapKind::Immutable, t),
                                                  {"r", "a", trans})}),
                                frame_eq(t)))
          + ")");
      }
      // Rule 2: unique frames unmentioned places. Seeding already excludes
      // used roots; the axiom is emitted only where a bare unique
      // annotation makes it non-redundant.
      if (rule_enabled(kFrameUnique) && e.frame_class != FrameClass::Interference
          && bare_unique_keys_.count(type_key(t))) {
        axioms_.push_back("; frame unique e" + std::to_string(e.id) + " " + type_key(t));
        axioms_.push_back(
          "(assert "
          + smt::forall({{"r", "Int"}, {"a", "Addr"}},
                        implies(smt::and_({g, app(cap_fn(CapKind::Unique, t),
                                                  {"r", "a", trans})}),
                                frame_eq(t)))
          + ")");
      }
      // Rules 3/4: local + noWriteRef across assignments and pure calls.
      const char* rule = nullptr;
      if (e.frame_class == FrameClass::NoopFrame) rule = kFrameAssignLocal;
      if (e.frame_class == FrameClass::PureCall) rule = kFramePureCallLocal;
      if (rule && rule_enabled(rule)) {
        axioms_.push_back(std::string("; frame ") + rule + " e" + std::to_string(e.id)
                          + " " + type_key(t));
        axioms_.push_back(
          "(assert "
          + smt::forall(
              {{"r", "Int"}, {"a", "Addr"}},
              implies(smt::and_({g, app(cap_fn(CapKind::Local, t), {"r", "a", trans}),
                                 app(cap_fn(CapKind::NoWriteRef, t), {"r", "a", trans})}),
                      frame_eq(t)))
          + ")");
      }
      // Rule 5: across interference, only thread-confined state survives.
      if (e.frame_class == FrameClass::Interference
          && rule_enabled(kFrameInterferenceLocal)) {
        axioms_.push_back("; frame interference_local e" + std::to_string(e.id) + " "
                          + type_key(t));
        axioms_.push_back(
          "(assert "
          + smt::forall({{"r", "Int"}, {"a", "Addr"}},
                        implies(smt::and_({g, app(cap_fn(CapKind::Local, t),
                                                  {"r", "a", trans})}),
                                frame_eq(t)))
          + ")");
      }
    }
  }

  // Ensures facts for the pure calls inside annotation conditions/targets of
  // library types reachable from the live roots, at the given version.
  void instantiate_annotation_support(int point, const std::string& ver)
  {
    std::string cache = "annsup:" + std::to_string(point) + ":" + ver;
    if (!declared_.insert(cache).second) return;
    if (!flow_.roots.count(point)) return;
    for (const RootPlace& r : flow_.roots.at(point)) {
      TypeExpr t = r.type;
      std::string recv_addr = addr_const(r.var);
      // Peel one reference layer to reach library instances.
      if (t.is_ref()) {
        std::string slot = app(mem_fn(t), {recv_addr, ver});
        recv_addr = app(sel_addr(t), {slot});
        t = t.args[0];
      }
      const StructInstance* si = struct_of(t);
      if (!si || si->annotations.empty()) continue;
      for (const TypedAnnotation& ann : si->annotations) {
        TypeExpr recv_type = ann.mut_receiver ? type_mut_ref(t) : type_shared_ref(t);
        mem_sort(recv_type);
        std::string self_term =
          app(mk_name(recv_type), {recv_addr, app(mem_fn(t), {recv_addr, ver})});
        std::map<std::string, BoundTerm> rebind;
        rebind["self"] = {self_term, recv_type};
        ECtx ctx;
        ctx.ver = ver;
        ctx.old_ver = ver;
        ctx.rebind = &rebind;
        if (ann.cond) enc(*ann.cond, ctx);
        enc(*ann.target, ctx);
      }
    }
  }

  // -------------------------------------------------------------- statements

  void encode_statement(const CfgEdge& e, const std::string& g, const std::string& pre,
                        const std::string& post)
  {
    const Stmt& s = *e.stmt;
    ECtx ctx;
    ctx.ver = pre;
    ctx.old_ver = pre;
    ctx.guard = g;
    switch (s.kind) {
      case StmtKind::Let: {
        if (is_impure_call(*s.expr)) {
          std::string res = encode_call(e, *s.expr, g, pre, post);
          bind_slot(g, s.let_name, res, post);
        } else {
          bind_slot(g, s.let_name, enc(*s.expr, ctx), post);
        }
        break;
      }
      case StmtKind::Assign: {
        bind_slot(g, s.target.base, enc(*s.expr, ctx), post);
        break;
      }
      case StmtKind::ExprStmt: {
        if (is_impure_call(*s.expr)) {
          encode_call(e, *s.expr, g, pre, post);
        } else {
          enc(*s.expr, ctx);  // may still emit pure support facts
        }
        break;
      }
      case StmtKind::Assert: {
        Obligation ob;
        ob.kind = ObligationKind::Assert;
        ob.file = fn_.file;
        ob.loc = s.loc;
        ob.description = "assertion";
        ob.goal = enc(*s.expr, ctx);
        ob.guard = g;
        obligations_.push_back(std::move(ob));
        break;
      }
      case StmtKind::Drop: {
        const TypeExpr& t = var_types_.at(s.target.base);
        const FunctionInstance* dropper =
          t.kind == TypeKind::Named ? prog_.find_function(type_key(t) + "::drop") : nullptr;
        if (dropper) {
          Expr call(ExprKind::Call, s.loc);
          call.resolved = dropper->key;
          call.callee = dropper->key;
          auto recv = std::make_unique<Expr>(ExprKind::AddrOf, s.loc);
          recv->addr_mut = true;
          recv->place = s.target;
          recv->type = type_mut_ref(t);
          call.args.push_back(std::move(recv));
          call.type = dropper->ret;
          encode_call(e, call, g, pre, post);
        }
        break;
      }
      case StmtKind::LetElse:
      case StmtKind::Match: {
        std::string scrut;
        if (is_impure_call(*s.expr)) {
          scrut = encode_call(e, *s.expr, g, pre, post);
        } else {
          std::string c = fresh_const("scrut.e" + std::to_string(e.id),
                                      mem_sort(s.expr->type));
          facts_.push_back("(assert " + implies(g, eq(c, enc(*s.expr, ctx))) + ")");
          scrut = c;
        }
        point_scrutinee_[e.to] = scrut;
        point_scrutinee_type_[e.to] = s.expr->type;
        break;
      }
      case StmtKind::Return: {
        if (s.expr) enc(*s.expr, ctx);  // support facts only
        break;
      }
      case StmtKind::If:
        break;  // conditions live on the branch edges
    }
  }

  bool is_impure_call(const Expr& e) const
  {
    if (e.kind != ExprKind::Call) return false;
    const FunctionInstance* fi = prog_.find_function(e.resolved);
    return fi && fi->purity == Purity::None;
  }

  std::string fresh_const(const std::string& hint, const std::string& sort)
  {
    std::string name = quote(hint);
    if (declared_.insert("const:" + name).second)
      fun_decls_.push_back("(declare-const " + name + " " + sort + ")");
    return name;
  }

  void bind_slot(const std::string& g, const std::string& var, const std::string& term,
                 const std::string& post)
  {
    const TypeExpr& t = var_types_.at(var);
    facts_.push_back("(assert "
                     + implies(g, eq(app(mem_fn(t), {addr_const(var), post}), term))
                     + ")");
  }

  // Encodes an impure call statement: precondition obligations at the pre
  // version, trusted postconditions at the post version. Returns the result
  // snapshot term.
  std::string encode_call(const CfgEdge& e, const Expr& call, const std::string& g,
                          const std::string& pre, const std::string& post)
  {
    const FunctionInstance* fi = prog_.find_function(call.resolved);
    assert(fi);
    ECtx ctx;
    ctx.ver = pre;
    ctx.old_ver = pre;
    ctx.guard = g;

    std::vector<std::string> raw;
    for (const ExprPtr& a : call.args) raw.push_back(enc(*a, ctx));

    std::map<std::string, BoundTerm> rebind;
    for (size_t i = 0; i < fi->params.size(); ++i) {
      const TypeExpr& pt = fi->params[i].type;
      const TypeExpr& at = call.args[i]->type;
      std::string term = pt == at ? raw[i] : adapt_arg(pt, at, raw[i], ctx, call.loc);
      rebind[fi->params[i].name] = {term, pt};
    }

    // Preconditions become obligations at the pre version.
    ECtx req_ctx = ctx;
    req_ctx.rebind = &rebind;
    for (size_t i = 0; i < fi->requires_.size(); ++i) {
      Obligation ob;
      ob.kind = fi->trusted ? ObligationKind::PanicFreedom : ObligationKind::Precondition;
      ob.file = fn_.file;
      ob.loc = call.loc;
      ob.description = "precondition " + std::to_string(i + 1) + " of " + fi->key;
      ob.goal = enc(*fi->requires_[i], req_ctx);
      ob.guard = g;
      obligations_.push_back(std::move(ob));
    }

    std::string res = fresh_const("res.e" + std::to_string(e.id), mem_sort(fi->ret));
    emit_result_coherence(fi->ret, res, post);
    rebind["result"] = {res, fi->ret};

    // Trusted callees' postconditions are assumed; bodied callees are
    // verified separately and only their frame effects apply here.
    if (fi->trusted) {
      ECtx ens_ctx;
      ens_ctx.ver = post;
      ens_ctx.old_ver = pre;
      ens_ctx.guard = g;
      ens_ctx.rebind = &rebind;
      for (const ExprPtr& en : fi->ensures_) {
        facts_.push_back("; ensures of " + fi->key + " at e" + std::to_string(e.id));
        facts_.push_back("(assert " + implies(g, enc(*en, ens_ctx)) + ")");
      }
    }
    return res;
  }

  void encode_branch(const CfgEdge& e, const std::string& g, const std::string& pre,
                     const std::string& post)
  {
    (void)post;
    std::string from_guard = point_guard_[e.from];
    std::string cond;
    if (e.cond) {
      ECtx ctx;
      ctx.ver = pre;
      ctx.old_ver = pre;
      ctx.guard = from_guard;
      cond = enc(*e.cond, ctx);
      if (!e.cond_value) cond = smt::not_(cond);
    } else {
      // Variant test on the evaluated scrutinee.
      const std::string& scrut = point_scrutinee_.at(e.from);
      const TypeExpr& st = point_scrutinee_type_.at(e.from);
      if (e.match_ctor == "_") {
        // The wildcard covers whatever the named arms of this match do not.
        cond = wildcard_test(e, st, scrut);
      } else {
        cond = smt::is_ctor(mk_variant(st, e.match_ctor), scrut);
      }
    }
    facts_.push_back("; branch guard e" + std::to_string(e.id));
    facts_.push_back("(assert (= " + g + " " + smt::and_({from_guard, cond}) + "))");

    // Pattern binder.
    if (e.match_binder) {
      const std::string& scrut = point_scrutinee_.at(e.from);
      const TypeExpr& st = point_scrutinee_type_.at(e.from);
      std::string payload = app(sel_payload(st, e.match_ctor), {scrut});
      bind_slot(g, *e.match_binder, payload, point_ver_[e.to]);
    }
  }

  std::string wildcard_test(const CfgEdge& edge, const TypeExpr& st,
                            const std::string& scrut)
  {
    // Named arms of the same match are the branch edges sharing the source.
    std::vector<std::string> named;
    for (const CfgEdge& e : flow_.graph.edges) {
      if (e.from == edge.from && e.kind == EdgeKind::Branch && e.match_ctor != "_"
          && !e.match_ctor.empty())
        named.push_back(smt::is_ctor(mk_variant(st, e.match_ctor), scrut));
    }
    return smt::not_(smt::or_(named));
  }
};

}  // namespace

std::string EncodedFunction::script_for(size_t index) const
{
  std::ostringstream os;
  for (const std::string& line : prelude) os << line << "\n";
  for (size_t i = 0; i < index; ++i) {
    os << "; established: " << obligations[i].description << "\n";
    os << "(assert " << smt::implies(obligations[i].guard, obligations[i].goal) << ")\n";
  }
  const Obligation& ob = obligations[index];
  os << "; goal: " << ob.description << "\n";
  os << "(assert " << ob.guard << ")\n";
  os << "(assert " << smt::not_(ob.goal) << ")\n";
  os << "(check-sat)\n";
  return os.str();
}

EncodedFunction encode_function(const FunctionInstance& fn, const FlowResult& flow,
                                const TypedProgram& prog, const EncodeOptions& opts)
{
  Encoder enc(fn, flow, prog, opts);
  return enc.run();
}

}  // namespace caplet

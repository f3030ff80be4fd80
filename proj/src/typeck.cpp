#include "caplet/typeck.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <set>

#include "caplet/printer.hpp"

namespace caplet {

namespace {

using Bindings = std::map<std::string, TypeExpr>;

TypeExpr subst_type(const TypeExpr& t, const Bindings& b)
{
  if (t.kind == TypeKind::Param) {
    auto it = b.find(t.name);
    if (it != b.end()) return it->second;
    return t;
  }
  TypeExpr out = t;
  out.args.clear();
  for (const TypeExpr& a : t.args) out.args.push_back(subst_type(a, b));
  return out;
}

bool has_param(const TypeExpr& t)
{
  if (t.kind == TypeKind::Param) return true;
  for (const TypeExpr& a : t.args)
    if (has_param(a)) return true;
  return false;
}

// Structural unification binding Param names on the declaration side.
bool unify(const TypeExpr& decl, const TypeExpr& concrete, Bindings& b)
{
  if (decl.kind == TypeKind::Param) {
    auto it = b.find(decl.name);
    if (it != b.end()) return it->second == concrete;
    b[decl.name] = concrete;
    return true;
  }
  if (decl.kind != concrete.kind) return false;
  if (decl.kind == TypeKind::Named && decl.name != concrete.name) return false;
  if (decl.kind == TypeKind::RawPtr && decl.ptr_mut != concrete.ptr_mut) return false;
  if (decl.args.size() != concrete.args.size()) return false;
  for (size_t i = 0; i < decl.args.size(); ++i)
    if (!unify(decl.args[i], concrete.args[i], b)) return false;
  return true;
}

void subst_expr(Expr& e, const Bindings& b)
{
  e.cast_type = subst_type(e.cast_type, b);
  for (ExprPtr& a : e.args) subst_expr(*a, b);
}

Stmt clone_stmt(const Stmt& s, const Bindings& b);

std::vector<Stmt> clone_block(const std::vector<Stmt>& blk, const Bindings& b)
{
  std::vector<Stmt> out;
  for (const Stmt& s : blk) out.push_back(clone_stmt(s, b));
  return out;
}

Stmt clone_stmt(const Stmt& s, const Bindings& b)
{
  Stmt out;
  out.kind = s.kind;
  out.loc = s.loc;
  out.let_name = s.let_name;
  out.let_ctor = s.let_ctor;
  if (s.let_type) out.let_type = subst_type(*s.let_type, b);
  if (s.expr) {
    out.expr = clone_expr(*s.expr);
    subst_expr(*out.expr, b);
  }
  out.target = s.target;
  out.then_block = clone_block(s.then_block, b);
  out.else_block = clone_block(s.else_block, b);
  for (const MatchArm& arm : s.arms) {
    MatchArm a;
    a.ctor = arm.ctor;
    a.binder = arm.binder;
    a.loc = arm.loc;
    a.block = clone_block(arm.block, b);
    out.arms.push_back(std::move(a));
  }
  return out;
}

bool block_always_returns(const std::vector<Stmt>& blk)
{
  for (const Stmt& s : blk) {
    if (s.kind == StmtKind::Return) return true;
    if (s.kind == StmtKind::If && !s.else_block.empty()
        && block_always_returns(s.then_block) && block_always_returns(s.else_block))
      return true;
    if (s.kind == StmtKind::Match && s.arms.size() >= 2) {
      bool all = true;
      for (const MatchArm& a : s.arms) all = all && block_always_returns(a.block);
      if (all) return true;
    }
  }
  return false;
}

}  // namespace

bool is_copy_type(const TypeExpr& t)
{
  switch (t.kind) {
    case TypeKind::Int:
    case TypeKind::Bool:
    case TypeKind::RawPtr:
    case TypeKind::SharedRef:
      return true;
    case TypeKind::Tuple: {
      for (const TypeExpr& a : t.args)
        if (!is_copy_type(a)) return false;
      return true;
    }
    default:
      return false;
  }
}

namespace {

class Checker {
public:
  explicit Checker(const std::vector<Program>& programs) : programs_(programs) {}

  TypedProgram run()
  {
    register_decls();
    // Instantiate every concrete function, in source order.
    for (const Program& prog : programs_) {
      for (const FunctionDecl& fn : prog.functions) {
        if (!fn.generics.empty()) continue;
        std::string key = function_instance(&fn, {}, fn.loc);
        if (fn.body && fn.purity == Purity::None && !fn.ghost)
          out_.verify_order.push_back(key);
      }
    }
    check_recursion();
    final_validation();
    return std::move(out_);
  }

private:
  const std::vector<Program>& programs_;
  TypedProgram out_;

  std::map<std::string, const StructDecl*> struct_decls_;
  std::map<std::string, const EnumDecl*> enum_decls_;
  std::map<std::string, std::vector<const FunctionDecl*>> methods_;
  std::map<std::string, const FunctionDecl*> free_fns_;
  // variant name -> (enum decl, variant index)
  std::map<std::string, std::pair<const EnumDecl*, size_t>> variants_;
  // call edges between bodied function instances, for the recursion check
  std::map<std::string, std::set<std::string>> call_edges_;
  std::string current_file_;

  [[noreturn]] void fail(Loc loc, const std::string& msg) const
  {
    throw CapletError(current_file_, loc, msg);
  }

  // ------------------------------------------------------------ declarations

  void register_decls()
  {
    for (const Program& prog : programs_) {
      current_file_ = prog.file;
      for (const StructDecl& s : prog.structs) {
        if (struct_decls_.count(s.name) || enum_decls_.count(s.name))
          fail(s.loc, "duplicate type '" + s.name + "'");
        struct_decls_[s.name] = &s;
      }
      for (const EnumDecl& e : prog.enums) {
        if (struct_decls_.count(e.name) || enum_decls_.count(e.name))
          fail(e.loc, "duplicate type '" + e.name + "'");
        if (e.variants.size() > 2)
          fail(e.loc, "enums are limited to at most two variants");
        enum_decls_[e.name] = &e;
        for (size_t i = 0; i < e.variants.size(); ++i) {
          const VariantDecl& v = e.variants[i];
          if (variants_.count(v.name))
            fail(v.loc, "variant name '" + v.name + "' is not unique across enums");
          variants_[v.name] = {&e, i};
        }
      }
      for (const FunctionDecl& fn : prog.functions) {
        if (fn.self_type.empty()) {
          if (free_fns_.count(fn.name))
            fail(fn.loc, "duplicate function '" + fn.name + "'");
          free_fns_[fn.name] = &fn;
        } else {
          for (const FunctionDecl* m : methods_[fn.self_type])
            if (m->name == fn.name)
              fail(fn.loc, "duplicate method '" + fn.self_type + "::" + fn.name + "'");
          methods_[fn.self_type].push_back(&fn);
        }
      }
    }
    for (const auto& [name, decl] : enum_decls_)
      for (const VariantDecl& v : decl->variants) out_.variant_enums[v.name] = name;
  }

  // ----------------------------------------------------------- instantiation

  std::string instance_key(const std::string& name, const std::vector<TypeExpr>& args)
  {
    if (args.empty()) return name;
    std::string key = name + "<";
    for (size_t i = 0; i < args.size(); ++i) {
      if (i) key += ", ";
      key += type_key(args[i]);
    }
    return key + ">";
  }

  // Ensures the named type instance exists; recursively instantiates the
  // types of its components.
  void require_type(const TypeExpr& t, Loc loc)
  {
    switch (t.kind) {
      case TypeKind::Param:
        fail(loc, "type is not concrete: free parameter '" + t.name + "'");
      case TypeKind::Named: {
        for (const TypeExpr& a : t.args) require_type(a, loc);
        auto sit = struct_decls_.find(t.name);
        if (sit != struct_decls_.end()) {
          struct_instance(sit->second, t.args, loc);
          return;
        }
        auto eit = enum_decls_.find(t.name);
        if (eit != enum_decls_.end()) {
          enum_instance(eit->second, t.args, loc);
          return;
        }
        fail(loc, "unknown type '" + t.name + "'");
      }
      default:
        for (const TypeExpr& a : t.args) require_type(a, loc);
    }
  }

  const StructInstance& struct_instance(const StructDecl* decl,
                                        const std::vector<TypeExpr>& args, Loc loc)
  {
    std::string key = instance_key(decl->name, args);
    auto it = out_.structs.find(key);
    if (it != out_.structs.end()) return it->second;
    if (decl->generics.size() != args.size())
      fail(loc, "wrong number of generic arguments for '" + decl->name + "'");
    Bindings b;
    for (size_t i = 0; i < args.size(); ++i) b[decl->generics[i]] = args[i];

    StructInstance inst;
    inst.key = key;
    inst.decl = decl;
    inst.args = args;
    inst.thread_shared = decl->thread_shared;
    for (const FieldDecl& f : decl->fields) {
      FieldDecl nf = f;
      nf.type = subst_type(f.type, b);
      if (nf.type.kind != TypeKind::UnsafeCell) {
        // UnsafeCell is allowed only here, as a library field; reject it
        // anywhere deeper.
        reject_unsafecell(nf.type, f.loc);
      }
      inst.fields.push_back(std::move(nf));
    }
    auto [slot, inserted] = out_.structs.emplace(key, std::move(inst));
    (void)inserted;
    // Component types (except behind UnsafeCell, which is opaque).
    for (const FieldDecl& f : slot->second.fields) {
      if (f.type.kind == TypeKind::UnsafeCell) {
        require_type(f.type.args[0], f.loc);
      } else {
        require_type(f.type, f.loc);
      }
    }
    // Annotations are typed against `self` of this concrete instance.
    TypeExpr self_ty;
    self_ty.kind = TypeKind::Named;
    self_ty.name = decl->name;
    self_ty.args = args;
    for (const CapabilityAnnotation& ann : decl->annotations) {
      TypedAnnotation ta;
      ta.mut_receiver = ann.mut_receiver;
      ta.kind = ann.kind;
      ta.loc = ann.loc;
      Env env;
      env.in_spec = true;
      env.self_only = true;
      env.ret = type_unit();
      env.vars["self"] =
        ann.mut_receiver ? type_mut_ref(self_ty) : type_shared_ref(self_ty);
      if (ann.cond) {
        ta.cond = clone_expr(*ann.cond);
        subst_expr(*ta.cond, b);
        TypeExpr ct = type_expr(ta.cond, env, nullptr);
        if (ct != type_bool())
          fail(ann.loc, "capability condition must be bool");
      }
      ta.target = clone_expr(*ann.target);
      subst_expr(*ta.target, b);
      TypeExpr tt = type_expr(ta.target, env, nullptr);
      if (tt.kind != TypeKind::RawPtr && !tt.is_ref())
        fail(ann.loc, "capability target must be a raw pointer or reference");
      out_.structs.at(key).annotations.push_back(std::move(ta));
    }
    return out_.structs.at(key);
  }

  void reject_unsafecell(const TypeExpr& t, Loc loc)
  {
    if (t.kind == TypeKind::UnsafeCell)
      fail(loc, "UnsafeCellOf is only allowed as a library struct field");
    for (const TypeExpr& a : t.args) reject_unsafecell(a, loc);
  }

  const EnumInstance& enum_instance(const EnumDecl* decl,
                                    const std::vector<TypeExpr>& args, Loc loc)
  {
    std::string key = instance_key(decl->name, args);
    auto it = out_.enums.find(key);
    if (it != out_.enums.end()) return it->second;
    if (decl->generics.size() != args.size())
      fail(loc, "wrong number of generic arguments for '" + decl->name + "'");
    Bindings b;
    for (size_t i = 0; i < args.size(); ++i) b[decl->generics[i]] = args[i];
    EnumInstance inst;
    inst.key = key;
    inst.decl = decl;
    inst.args = args;
    int payloads = 0;
    for (const VariantDecl& v : decl->variants) {
      VariantDecl nv = v;
      if (nv.payload) {
        nv.payload = subst_type(*v.payload, b);
        ++payloads;
        (void)payloads;
      }
      inst.variants.push_back(std::move(nv));
    }
    auto [slot, inserted] = out_.enums.emplace(key, std::move(inst));
    (void)inserted;
    for (const VariantDecl& v : slot->second.variants)
      if (v.payload) require_type(*v.payload, v.loc);
    return slot->second;
  }

  std::string function_instance(const FunctionDecl* decl, const Bindings& bindings,
                                Loc call_loc)
  {
    // Key: methods are qualified by their concrete self type.
    std::string key;
    if (!decl->self_type.empty()) {
      std::vector<TypeExpr> self_args;
      for (const std::string& g : decl->generics) {
        auto it = bindings.find(g);
        if (it == bindings.end())
          fail(call_loc, "cannot infer type parameter '" + g + "' for '"
                           + decl->qualified_name() + "'");
        self_args.push_back(it->second);
      }
      // Impl generics come first in decl->generics; the self type uses all
      // of them (fn-level generics are not supported on methods).
      key = instance_key(decl->self_type, self_args) + "::" + decl->name;
    } else if (!decl->generics.empty()) {
      std::vector<TypeExpr> targs;
      for (const std::string& g : decl->generics) {
        auto it = bindings.find(g);
        if (it == bindings.end())
          fail(call_loc, "cannot infer type parameter '" + g + "' for '"
                           + decl->name + "'");
        targs.push_back(it->second);
      }
      key = instance_key(decl->name, targs);
    } else {
      key = decl->name;
    }
    if (out_.functions.count(key)) return key;

    auto inst = std::make_unique<FunctionInstance>();
    FunctionInstance* fi = inst.get();
    fi->key = key;
    fi->file = decl->file;
    fi->decl = decl;
    fi->purity = decl->purity;
    fi->ghost = decl->ghost;
    fi->trusted = !decl->body.has_value();
    fi->loc = decl->loc;
    if (!decl->self_type.empty()) {
      std::vector<TypeExpr> self_args;
      for (const std::string& g : decl->generics) self_args.push_back(bindings.at(g));
      fi->self_key = instance_key(decl->self_type, self_args);
    }
    for (const Param& p : decl->params) {
      Param np = p;
      np.type = subst_type(p.type, bindings);
      if (has_param(np.type))
        fail(call_loc, "parameter type of '" + key + "' is not concrete");
      reject_unsafecell(np.type, p.loc);
      fi->params.push_back(std::move(np));
    }
    fi->ret = subst_type(decl->ret, bindings);
    if (has_param(fi->ret)) fail(call_loc, "return type of '" + key + "' is not concrete");
    reject_unsafecell(fi->ret, decl->loc);
    out_.functions.emplace(key, std::move(inst));

    std::string saved_file = current_file_;
    current_file_ = decl->file;
    for (const Param& p : fi->params) require_type(p.type, p.loc);
    require_type(fi->ret, decl->loc);

    // Contracts.
    Env spec_env;
    spec_env.in_spec = true;
    spec_env.ret = fi->ret;
    for (const Param& p : fi->params) spec_env.vars[p.name] = p.type;
    for (const ExprPtr& r : decl->requires_) {
      ExprPtr e = clone_expr(*r);
      subst_expr(*e, bindings);
      if (type_expr(e, spec_env, nullptr) != type_bool())
        fail(e->loc, "requires clause must be bool");
      fi->requires_.push_back(std::move(e));
    }
    spec_env.in_ensures = true;
    for (const ExprPtr& en : decl->ensures_) {
      ExprPtr e = clone_expr(*en);
      subst_expr(*e, bindings);
      if (type_expr(e, spec_env, nullptr) != type_bool())
        fail(e->loc, "ensures clause must be bool");
      fi->ensures_.push_back(std::move(e));
    }

    // Body.
    if (decl->body) {
      Env env;
      env.ret = fi->ret;
      env.fn_key = key;
      env.in_pure_body = decl->purity != Purity::None;
      for (const Param& p : fi->params) env.vars[p.name] = p.type;
      std::vector<Stmt> body = clone_block(*decl->body, bindings);
      check_block(body, env);
      if (!fi->ret.is_unit() && !block_always_returns(body))
        fail(decl->loc, "function '" + key + "' must return a value on all paths");
      out_.functions.at(key)->body = std::move(body);
    }
    current_file_ = saved_file;
    return key;
  }

  // ------------------------------------------------------------------ typing

  struct Env {
    std::map<std::string, TypeExpr> vars;
    std::set<std::string> moved;
    bool in_spec = false;
    bool in_ensures = false;
    bool in_pure_body = false;  // deref(..) is admitted; purity rules judge it
    bool self_only = false;  // annotation exprs may mention only `self`
    TypeExpr ret = type_unit();
    std::string fn_key;
    int temp_counter = 0;
    std::vector<Stmt>* hoist = nullptr;  // receiver temporaries go here
  };

  const StructInstance* named_struct(const TypeExpr& t)
  {
    if (t.kind != TypeKind::Named) return nullptr;
    return out_.find_struct(instance_key(t.name, t.args));
  }

  const EnumInstance* named_enum(const TypeExpr& t)
  {
    if (t.kind != TypeKind::Named) return nullptr;
    return out_.find_enum(instance_key(t.name, t.args));
  }

  TypeExpr type_place(Place& place, Env& env, Loc loc)
  {
    if (env.self_only && place.base != "self")
      fail(loc, "capability annotations may mention only 'self'");
    auto it = env.vars.find(place.base);
    if (it == env.vars.end()) fail(loc, "unknown variable '" + place.base + "'");
    if (env.moved.count(place.base))
      fail(loc, "use of moved variable '" + place.base + "'");
    TypeExpr t = it->second;
    std::vector<Projection> projs;
    for (const Projection& p : place.projs) {
      if (p.kind == Projection::Deref) {
        if (!t.is_ref())
          fail(loc, "cannot dereference a place of type " + type_key(t));
        projs.push_back(p);
        t = t.args[0];
        continue;
      }
      // Auto-deref through references for field access.
      while (t.is_ref()) {
        projs.push_back({Projection::Deref, ""});
        t = t.args[0];
      }
      if (t.kind == TypeKind::Tuple) {
        size_t idx = 0;
        try {
          idx = std::stoul(p.field);
        } catch (...) {
          fail(loc, "tuple fields are indexed by number");
        }
        if (idx >= t.args.size()) fail(loc, "tuple index out of range");
        projs.push_back(p);
        t = t.args[idx];
        continue;
      }
      const StructInstance* si = named_struct(t);
      if (!si) fail(loc, "type " + type_key(t) + " has no field '" + p.field + "'");
      bool found = false;
      for (const FieldDecl& f : si->fields) {
        if (f.name == p.field) {
          t = f.type;
          found = true;
          break;
        }
      }
      if (!found)
        fail(loc, "type " + type_key(si->args.empty() ? t : t) + " has no field '"
                    + p.field + "'");
      projs.push_back(p);
    }
    place.projs = std::move(projs);
    return t;
  }

  // Types (and possibly rewrites) the expression; returns its type.
  TypeExpr type_expr(ExprPtr& ep, Env& env, const TypeExpr* expected)
  {
    Expr& e = *ep;
    switch (e.kind) {
      case ExprKind::IntLit: return e.type = type_int();
      case ExprKind::BoolLit: return e.type = type_bool();
      case ExprKind::UnitLit: return e.type = type_unit();
      case ExprKind::Result:
        if (!env.in_ensures) fail(e.loc, "'result' is only allowed in ensures");
        return e.type = env.ret;
      case ExprKind::Old: {
        if (!env.in_ensures) fail(e.loc, "'old' is only allowed in ensures");
        return e.type = type_expr(e.args[0], env, expected);
      }
      case ExprKind::PlaceRead: {
        // A bare name can be a payload-less enum constructor.
        if (e.place.projs.empty()) {
          auto vit = variants_.find(e.place.base);
          if (vit != variants_.end() && !env.vars.count(e.place.base)) {
            e.kind = ExprKind::Ctor;
            e.callee = e.place.base;
            return type_ctor(ep, env, expected);
          }
        }
        return e.type = type_place(e.place, env, e.loc);
      }
      case ExprKind::AddrOf: {
        TypeExpr t = type_place(e.place, env, e.loc);
        return e.type = e.addr_mut ? type_mut_ref(t) : type_shared_ref(t);
      }
      case ExprKind::Unary: {
        TypeExpr t = type_expr(e.args[0], env, nullptr);
        if (e.op == "!") {
          if (t != type_bool()) fail(e.loc, "'!' expects bool");
          return e.type = type_bool();
        }
        if (t != type_int()) fail(e.loc, "unary '-' expects i32");
        return e.type = type_int();
      }
      case ExprKind::Binary: return type_binary(e, env);
      case ExprKind::Cast: {
        TypeExpr src = type_expr(e.args[0], env, nullptr);
        if (e.cast_type.kind != TypeKind::RawPtr)
          fail(e.loc, "casts may only target raw pointer types");
        require_type(e.cast_type, e.loc);
        TypeExpr pointee = e.cast_type.args[0];
        if (src.is_ref() || src.kind == TypeKind::RawPtr) {
          if (src.args[0] != pointee)
            fail(e.loc, "cast changes the pointee type");
        } else {
          fail(e.loc, "cast source must be a reference or raw pointer");
        }
        return e.type = e.cast_type;
      }
      case ExprKind::DerefBuiltin: {
        if (!env.in_spec && !env.in_pure_body)
          fail(e.loc, "deref(..) is only allowed in specifications");
        TypeExpr t = type_expr(e.args[0], env, nullptr);
        if (t.kind != TypeKind::RawPtr) fail(e.loc, "deref expects a raw pointer");
        return e.type = t.args[0];
      }
      case ExprKind::DerefValue: {
        TypeExpr t = type_expr(e.args[0], env, nullptr);
        if (t.is_ref()) return e.type = t.args[0];
        // `*v` over a library type desugars through its deref method.
        if (const StructInstance* si = named_struct(t)) {
          (void)si;
          ExprPtr inner = std::move(e.args[0]);
          auto call = std::make_unique<Expr>(ExprKind::MethodCall, e.loc);
          call->callee = "deref";
          call->args.push_back(std::move(inner));
          e.args.clear();
          e.args.push_back(std::move(call));
          TypeExpr rt = type_call(e.args[0], env, nullptr);
          if (!rt.is_ref()) fail(e.loc, "deref method must return a reference");
          return e.type = rt.args[0];
        }
        fail(e.loc, "cannot dereference a value of type " + type_key(t));
      }
      case ExprKind::Call:
      case ExprKind::MethodCall: {
        // A call spelled like a constructor resolves to the enum variant.
        if (e.kind == ExprKind::Call && !e.callee.empty()
            && variants_.count(e.callee)) {
          e.kind = ExprKind::Ctor;
          return type_ctor(ep, env, expected);
        }
        return type_call(ep, env, expected);
      }
      case ExprKind::Ctor: return type_ctor(ep, env, expected);
    }
    fail(e.loc, "unsupported expression");
  }

  TypeExpr type_binary(Expr& e, Env& env)
  {
    const std::string& op = e.op;
    if (op == "&&" || op == "||" || op == "==>") {
      if (op == "==>" && !env.in_spec) fail(e.loc, "'==>' is only allowed in specifications");
      if (type_expr(e.args[0], env, nullptr) != type_bool()
          || type_expr(e.args[1], env, nullptr) != type_bool())
        fail(e.loc, "'" + op + "' expects bool operands");
      return e.type = type_bool();
    }
    if (op == "+" || op == "-" || op == "*") {
      if (type_expr(e.args[0], env, nullptr) != type_int()
          || type_expr(e.args[1], env, nullptr) != type_int())
        fail(e.loc, "'" + op + "' expects i32 operands");
      return e.type = type_int();
    }
    if (op == "<" || op == "<=" || op == ">" || op == ">=") {
      if (type_expr(e.args[0], env, nullptr) != type_int()
          || type_expr(e.args[1], env, nullptr) != type_int())
        fail(e.loc, "'" + op + "' expects i32 operands");
      return e.type = type_bool();
    }
    if (op == "==" || op == "!=" || op == "====") {
      if (op == "====" && !env.in_spec)
        fail(e.loc, "'====' is only allowed in specifications");
      TypeExpr lt = type_expr(e.args[0], env, nullptr);
      TypeExpr rt = type_expr(e.args[1], env, &lt);
      if (lt != rt)
        fail(e.loc, "'" + op + "' applied to operands of different types: "
                      + type_key(lt) + " vs " + type_key(rt));
      return e.type = type_bool();
    }
    fail(e.loc, "unknown operator '" + op + "'");
  }

  TypeExpr type_ctor(ExprPtr& ep, Env& env, const TypeExpr* expected)
  {
    Expr& e = *ep;
    auto vit = variants_.find(e.callee);
    if (vit == variants_.end()) fail(e.loc, "unknown constructor '" + e.callee + "'");
    const EnumDecl* decl = vit->second.first;
    const VariantDecl& variant = decl->variants[vit->second.second];
    Bindings b;
    if (variant.payload) {
      if (e.args.size() != 1)
        fail(e.loc, "constructor '" + e.callee + "' takes one argument");
      TypeExpr at = type_expr(e.args[0], env, nullptr);
      if (!unify(*variant.payload, at, b))
        fail(e.loc, "constructor argument type mismatch");
    } else if (!e.args.empty()) {
      fail(e.loc, "constructor '" + e.callee + "' takes no arguments");
    }
    // Remaining parameters come from the expected type.
    if (expected && expected->kind == TypeKind::Named && expected->name == decl->name) {
      TypeExpr decl_self;
      decl_self.kind = TypeKind::Named;
      decl_self.name = decl->name;
      for (const std::string& g : decl->generics) {
        TypeExpr p;
        p.kind = TypeKind::Param;
        p.name = g;
        decl_self.args.push_back(p);
      }
      unify(decl_self, *expected, b);
    }
    std::vector<TypeExpr> args;
    for (const std::string& g : decl->generics) {
      auto it = b.find(g);
      if (it == b.end())
        fail(e.loc, "cannot infer enum type parameter '" + g + "' for '" + e.callee + "'");
      args.push_back(it->second);
    }
    const EnumInstance& inst = enum_instance(decl, args, e.loc);
    e.resolved = inst.key + "::" + e.callee;
    TypeExpr t;
    t.kind = TypeKind::Named;
    t.name = decl->name;
    t.args = args;
    return e.type = t;
  }

  TypeExpr type_call(ExprPtr& ep, Env& env, const TypeExpr* expected)
  {
    (void)expected;
    Expr& e = *ep;
    // Re-typing a resolved call (e.g. a hoisted receiver) is the identity.
    if (e.kind == ExprKind::Call && !e.resolved.empty()) return e.type;
    const FunctionDecl* decl = nullptr;
    bool is_method_syntax = e.kind == ExprKind::MethodCall;

    if (is_method_syntax) {
      TypeExpr recv_t = type_expr(e.args[0], env, nullptr);
      TypeExpr peeled = recv_t;
      while (peeled.is_ref() || peeled.kind == TypeKind::RawPtr) peeled = peeled.args[0];
      if (peeled.kind != TypeKind::Named)
        fail(e.loc, "method call on non-library type " + type_key(recv_t));
      decl = find_method(peeled.name, e.callee, e.loc);
    } else {
      std::string name = e.callee;
      size_t sep = name.find("::");
      if (sep != std::string::npos) {
        decl = find_method(name.substr(0, sep), name.substr(sep + 2), e.loc);
      } else {
        auto it = free_fns_.find(name);
        if (it == free_fns_.end()) fail(e.loc, "unknown function '" + name + "'");
        decl = it->second;
      }
      // Type arguments before unification.
      for (ExprPtr& a : e.args) type_expr(a, env, nullptr);
    }

    if (decl->ghost && !env.in_spec)
      fail(e.loc, "ghost function '" + decl->qualified_name()
                    + "' may only be called from specifications");
    if (e.args.size() != decl->params.size())
      fail(e.loc, "wrong number of arguments for '" + decl->qualified_name() + "'");

    // For method syntax the receiver may need auto-referencing before it
    // matches the declared self parameter.
    if (is_method_syntax && !decl->params.empty()) {
      const TypeExpr& pt = decl->params[0].type;
      TypeExpr rt = e.args[0]->type;
      bool param_ref = pt.kind == TypeKind::SharedRef || pt.kind == TypeKind::MutRef;
      bool recv_value = !rt.is_ref() && rt.kind != TypeKind::RawPtr;
      if (param_ref && recv_value) {
        if (e.args[0]->kind != ExprKind::PlaceRead && !env.in_spec && env.hoist) {
          // Bind the receiver to a fresh temporary so it can be borrowed.
          std::string temp = "__t" + std::to_string(env.temp_counter++);
          Stmt let;
          let.kind = StmtKind::Let;
          let.loc = e.args[0]->loc;
          let.let_name = temp;
          let.let_type = rt;
          let.expr = std::move(e.args[0]);
          mark_move(*let.expr, env);
          env.vars[temp] = rt;
          auto read = std::make_unique<Expr>(ExprKind::PlaceRead, let.loc);
          read->place.base = temp;
          read->place.loc = let.loc;
          read->type = rt;
          e.args[0] = std::move(read);
          env.hoist->push_back(std::move(let));
        }
        if (e.args[0]->kind == ExprKind::PlaceRead) {
          auto addr = std::make_unique<Expr>(ExprKind::AddrOf, e.args[0]->loc);
          addr->addr_mut = pt.kind == TypeKind::MutRef;
          addr->place = e.args[0]->place;
          addr->type = addr->addr_mut ? type_mut_ref(rt) : type_shared_ref(rt);
          e.args[0] = std::move(addr);
        } else if (!env.in_spec || pt.kind == TypeKind::MutRef) {
          // In specifications a value may stand for a shared reference to
          // it; pure-value callees never look at the address.
          fail(e.loc, "cannot borrow a temporary as a method receiver");
        }
      }
      for (size_t i = 1; i < e.args.size(); ++i) type_expr(e.args[i], env, nullptr);
    }

    Bindings b;
    for (size_t i = 0; i < e.args.size(); ++i) {
      TypeExpr at = e.args[i]->type;
      TypeExpr pt = decl->params[i].type;
      // Specs may pass a raw pointer where a reference is expected: the
      // encoder reconstructs the pointee from the address.
      if (env.in_spec && at.kind == TypeKind::RawPtr && pt.kind == TypeKind::SharedRef) {
        TypeExpr as_ref = type_shared_ref(at.args[0]);
        if (unify(pt, as_ref, b)) continue;
      }
      // ... and a value where a shared reference is expected (pure-value
      // callees only; checked during encoding).
      if (env.in_spec && !at.is_ref() && pt.kind == TypeKind::SharedRef) {
        TypeExpr as_ref = type_shared_ref(at);
        if (unify(pt, as_ref, b)) continue;
      }
      // &mut coerces to & at call boundaries.
      if (at.kind == TypeKind::MutRef && pt.kind == TypeKind::SharedRef) {
        TypeExpr as_shared = type_shared_ref(at.args[0]);
        if (unify(pt, as_shared, b)) continue;
      }
      if (!unify(pt, at, b))
        fail(e.args[i]->loc, "argument " + std::to_string(i + 1) + " of '"
                               + decl->qualified_name() + "' has type " + type_key(at)
                               + ", expected " + type_key(subst_type(pt, b)));
    }
    for (const std::string& g : decl->generics) {
      if (!b.count(g))
        fail(e.loc, "cannot infer type parameter '" + g + "' for '"
                      + decl->qualified_name() + "'");
    }

    std::string key = function_instance(decl, b, e.loc);
    e.kind = ExprKind::Call;
    e.resolved = key;
    if (!env.fn_key.empty() && decl->body) call_edges_[env.fn_key].insert(key);
    return e.type = subst_type(decl->ret, b);
  }

  const FunctionDecl* find_method(const std::string& type_name, const std::string& fn,
                                  Loc loc)
  {
    auto it = methods_.find(type_name);
    if (it != methods_.end()) {
      for (const FunctionDecl* m : it->second)
        if (m->name == fn) return m;
    }
    fail(loc, "unknown method '" + type_name + "::" + fn + "'");
  }

  // -------------------------------------------------------------- statements

  void check_block(std::vector<Stmt>& blk, Env& env)
  {
    std::vector<Stmt> out;
    for (Stmt& s : blk) {
      check_stmt(s, env, out);
      out.push_back(std::move(s));
    }
    blk = std::move(out);
  }

  void check_stmt(Stmt& s, Env& env, std::vector<Stmt>& hoisted)
  {
    std::vector<Stmt>* saved_hoist = env.hoist;
    env.hoist = &hoisted;
    struct Restore {
      Env& env;
      std::vector<Stmt>* saved;
      ~Restore() { env.hoist = saved; }
    } restore{env, saved_hoist};
    switch (s.kind) {
      case StmtKind::Let: {
        TypeExpr t = type_expr(s.expr, env,
                               s.let_type ? &*s.let_type : nullptr);
        if (s.let_type && *s.let_type != t)
          fail(s.loc, "let type annotation mismatch: declared " + type_key(*s.let_type)
                        + ", found " + type_key(t));
        hoist_impure(s.expr, env, hoisted, /*allow_top=*/true);
        mark_move(*s.expr, env);
        if (env.vars.count(s.let_name))
          fail(s.loc, "variable '" + s.let_name + "' is already defined");
        env.vars[s.let_name] = t;
        break;
      }
      case StmtKind::LetElse: {
        TypeExpr t = type_expr(s.expr, env, nullptr);
        hoist_impure(s.expr, env, hoisted, /*allow_top=*/true);
        mark_move(*s.expr, env);
        const EnumInstance* ei = named_enum(t);
        if (!ei) fail(s.loc, "let-else scrutinee must be an enum, found " + type_key(t));
        const VariantDecl* v = nullptr;
        for (const VariantDecl& cand : ei->variants)
          if (cand.name == s.let_ctor) v = &cand;
        if (!v) fail(s.loc, "enum " + ei->key + " has no variant '" + s.let_ctor + "'");
        if (!v->payload) fail(s.loc, "let-else pattern needs a payload variant");
        Env else_env = env;
        check_block(s.then_block, else_env);
        if (!block_always_returns(s.then_block))
          fail(s.loc, "the else block of let-else must return");
        if (env.vars.count(s.let_name))
          fail(s.loc, "variable '" + s.let_name + "' is already defined");
        env.vars[s.let_name] = *v->payload;
        break;
      }
      case StmtKind::Assign: {
        if (!s.target.projs.empty())
          fail(s.loc, "assignment targets must be whole variables");
        TypeExpr tt = type_place(s.target, env, s.loc);
        TypeExpr vt = type_expr(s.expr, env, &tt);
        if (tt != vt)
          fail(s.loc, "assignment type mismatch: " + type_key(tt) + " vs " + type_key(vt));
        hoist_impure(s.expr, env, hoisted, false);
        mark_move(*s.expr, env);
        env.moved.erase(s.target.base);
        break;
      }
      case StmtKind::Assert: {
        Env spec_env = env;
        spec_env.in_spec = true;
        if (type_expr(s.expr, spec_env, nullptr) != type_bool())
          fail(s.loc, "assert expects a bool condition");
        env.vars = spec_env.vars;
        hoist_impure(s.expr, env, hoisted, false);
        break;
      }
      case StmtKind::If: {
        if (type_expr(s.expr, env, nullptr) != type_bool())
          fail(s.loc, "if condition must be bool");
        hoist_impure(s.expr, env, hoisted, false);
        Env then_env = env;
        Env else_env = env;
        check_block(s.then_block, then_env);
        check_block(s.else_block, else_env);
        for (const std::string& m : then_env.moved) env.moved.insert(m);
        for (const std::string& m : else_env.moved) env.moved.insert(m);
        env.temp_counter = std::max(then_env.temp_counter, else_env.temp_counter);
        break;
      }
      case StmtKind::Match: {
        TypeExpr t = type_expr(s.expr, env, nullptr);
        hoist_impure(s.expr, env, hoisted, false);
        mark_move(*s.expr, env);
        const EnumInstance* ei = named_enum(t);
        if (!ei) fail(s.loc, "match scrutinee must be an enum, found " + type_key(t));
        std::set<std::string> seen;
        for (MatchArm& arm : s.arms) {
          Env arm_env = env;
          if (arm.ctor != "_") {
            const VariantDecl* v = nullptr;
            for (const VariantDecl& cand : ei->variants)
              if (cand.name == arm.ctor) v = &cand;
            if (!v) fail(arm.loc, "enum " + ei->key + " has no variant '" + arm.ctor + "'");
            if (arm.binder) {
              if (!v->payload) fail(arm.loc, "variant '" + arm.ctor + "' has no payload");
              arm_env.vars[*arm.binder] = *v->payload;
            }
            seen.insert(arm.ctor);
          }
          check_block(arm.block, arm_env);
          for (const std::string& m : arm_env.moved)
            if (env.vars.count(m)) env.moved.insert(m);
        }
        bool wildcard = false;
        for (const MatchArm& arm : s.arms) wildcard = wildcard || arm.ctor == "_";
        if (!wildcard && seen.size() != ei->variants.size())
          fail(s.loc, "match must cover all variants or use '_'");
        break;
      }
      case StmtKind::Drop: {
        if (!s.target.projs.empty()) fail(s.loc, "drop takes a whole variable");
        TypeExpr t = type_place(s.target, env, s.loc);
        // A drop contract on the type behaves like a call; make sure the
        // instance exists for the encoder.
        if (t.kind == TypeKind::Named) {
          auto mit = methods_.find(t.name);
          if (mit != methods_.end()) {
            for (const FunctionDecl* m : mit->second) {
              if (m->name != "drop") continue;
              Bindings b;
              for (size_t i = 0; i < m->generics.size() && i < t.args.size(); ++i)
                b[m->generics[i]] = t.args[i];
              std::string key = function_instance(m, b, s.loc);
              if (!env.fn_key.empty() && out_.functions.at(key)->body)
                call_edges_[env.fn_key].insert(key);
            }
          }
        }
        env.moved.insert(s.target.base);
        break;
      }
      case StmtKind::Return: {
        if (s.expr) {
          TypeExpr t = type_expr(s.expr, env, &env.ret);
          if (t != env.ret)
            fail(s.loc, "return type mismatch: " + type_key(t) + " vs expected "
                          + type_key(env.ret));
          hoist_impure(s.expr, env, hoisted, false);
          mark_move(*s.expr, env);
        } else if (!env.ret.is_unit()) {
          fail(s.loc, "missing return value");
        }
        break;
      }
      case StmtKind::ExprStmt: {
        type_expr(s.expr, env, nullptr);
        hoist_impure(s.expr, env, hoisted, /*allow_top=*/true);
        break;
      }
    }
  }

  // Replaces non-top-level impure calls with fresh temporaries so that every
  // impure call is the sole right-hand side of a statement.
  void hoist_impure(ExprPtr& e, Env& env, std::vector<Stmt>& hoisted, bool allow_top)
  {
    for (ExprPtr& a : e->args) hoist_impure(a, env, hoisted, false);
    if (e->kind != ExprKind::Call || allow_top) return;
    const FunctionInstance* fi = out_.find_function(e->resolved);
    if (!fi || fi->purity != Purity::None) return;
    std::string temp = "__t" + std::to_string(env.temp_counter++);
    Stmt let;
    let.kind = StmtKind::Let;
    let.loc = e->loc;
    let.let_name = temp;
    let.let_type = e->type;
    let.expr = std::move(e);
    mark_move(*let.expr, env);
    env.vars[temp] = *let.let_type;
    auto read = std::make_unique<Expr>(ExprKind::PlaceRead, let.loc);
    read->place.base = temp;
    read->place.loc = let.loc;
    read->type = *let.let_type;
    e = std::move(read);
    hoisted.push_back(std::move(let));
  }

  // Marks variables moved by this (already typed) expression tree.
  void mark_move(Expr& e, Env& env)
  {
    switch (e.kind) {
      case ExprKind::PlaceRead:
        if (e.place.projs.empty() && !is_copy_type(e.type)) env.moved.insert(e.place.base);
        break;
      case ExprKind::Call: {
        const FunctionInstance* fi = out_.find_function(e.resolved);
        for (size_t i = 0; i < e.args.size(); ++i) {
          Expr& a = *e.args[i];
          bool by_value = !fi || i >= fi->params.size()
                            ? true
                            : !fi->params[i].type.is_ref();
          if (by_value) mark_move(a, env);
        }
        break;
      }
      case ExprKind::Ctor:
        for (ExprPtr& a : e.args) mark_move(*a, env);
        break;
      default:
        break;
    }
  }

  // ------------------------------------------------------- global validation

  void check_recursion()
  {
    // DFS over call edges between bodied functions.
    std::map<std::string, int> state;  // 0 unvisited, 1 on stack, 2 done
    std::function<void(const std::string&)> dfs = [&](const std::string& key) {
      state[key] = 1;
      auto it = call_edges_.find(key);
      if (it != call_edges_.end()) {
        for (const std::string& next : it->second) {
          int st = state.count(next) ? state[next] : 0;
          if (st == 1) {
            const FunctionInstance* fi = out_.find_function(key);
            current_file_ = fi ? fi->file : "";
            fail(fi ? fi->loc : Loc{},
                 "recursion between bodied functions is not supported ('" + key
                   + "' -> '" + next + "')");
          }
          if (st == 0) dfs(next);
        }
      }
      state[key] = 2;
    };
    for (const auto& [key, fi] : out_.functions)
      if (fi->body && !state.count(key)) dfs(key);
  }

  void final_validation()
  {
    for (const auto& [key, fi] : out_.functions) {
      for (const Param& p : fi->params)
        if (has_param(p.type)) fail(fi->loc, "free type parameter in '" + key + "'");
      if (has_param(fi->ret)) fail(fi->loc, "free type parameter in '" + key + "'");
    }
  }
};

}  // namespace

TypedProgram typecheck(const std::vector<Program>& programs)
{
  Checker checker(programs);
  return checker.run();
}

}  // namespace caplet

#include "caplet/ast.hpp"

#include <sstream>

namespace caplet {

TypeExpr type_int()
{
  TypeExpr t;
  t.kind = TypeKind::Int;
  return t;
}

TypeExpr type_bool()
{
  TypeExpr t;
  t.kind = TypeKind::Bool;
  return t;
}

TypeExpr type_unit()
{
  TypeExpr t;
  t.kind = TypeKind::Tuple;
  return t;
}

TypeExpr type_shared_ref(TypeExpr inner)
{
  TypeExpr t;
  t.kind = TypeKind::SharedRef;
  t.args.push_back(std::move(inner));
  return t;
}

TypeExpr type_mut_ref(TypeExpr inner)
{
  TypeExpr t;
  t.kind = TypeKind::MutRef;
  t.args.push_back(std::move(inner));
  return t;
}

TypeExpr type_raw_ptr(TypeExpr inner, bool is_mut)
{
  TypeExpr t;
  t.kind = TypeKind::RawPtr;
  t.ptr_mut = is_mut;
  t.args.push_back(std::move(inner));
  return t;
}

std::string type_key(const TypeExpr& t)
{
  switch (t.kind) {
    case TypeKind::Int: return "i32";
    case TypeKind::Bool: return "bool";
    case TypeKind::SharedRef: return "&" + type_key(t.args[0]);
    case TypeKind::MutRef: return "&mut " + type_key(t.args[0]);
    case TypeKind::RawPtr:
      return (t.ptr_mut ? "*mut " : "*const ") + type_key(t.args[0]);
    case TypeKind::UnsafeCell: return "UnsafeCellOf<" + type_key(t.args[0]) + ">";
    case TypeKind::Param: return t.name;
    case TypeKind::Named: {
      std::string s = t.name;
      if (!t.args.empty()) {
        s += "<";
        for (size_t i = 0; i < t.args.size(); ++i) {
          if (i) s += ", ";
          s += type_key(t.args[i]);
        }
        s += ">";
      }
      return s;
    }
    case TypeKind::Tuple: {
      std::string s = "(";
      for (size_t i = 0; i < t.args.size(); ++i) {
        if (i) s += ", ";
        s += type_key(t.args[i]);
      }
      return s + ")";
    }
  }
  return "?";
}

std::string Place::str() const
{
  std::string out = base;
  int derefs = 0;
  for (const Projection& p : projs) {
    if (p.kind == Projection::Field) {
      out += "." + p.field;
    } else {
      ++derefs;
    }
  }
  for (int i = 0; i < derefs; ++i) out = "*" + out;
  return out;
}

ExprPtr clone_expr(const Expr& e)
{
  auto out = std::make_unique<Expr>(e.kind, e.loc);
  out->int_val = e.int_val;
  out->bool_val = e.bool_val;
  out->op = e.op;
  out->callee = e.callee;
  out->place = e.place;
  out->addr_mut = e.addr_mut;
  out->cast_type = e.cast_type;
  out->type = e.type;
  out->resolved = e.resolved;
  for (const ExprPtr& a : e.args) out->args.push_back(clone_expr(*a));
  return out;
}

}  // namespace caplet

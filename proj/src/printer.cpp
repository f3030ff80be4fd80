#include "caplet/printer.hpp"

#include <sstream>

namespace caplet {

namespace {

// Binding strength used to decide parenthesization; higher binds tighter.
int binary_prec(const std::string& op)
{
  if (op == "==>") return 1;
  if (op == "||") return 2;
  if (op == "&&") return 3;
  if (op == "====" || op == "==" || op == "!=" || op == "<" || op == "<=" || op == ">"
      || op == ">=")
    return 4;
  if (op == "+" || op == "-") return 5;
  if (op == "*") return 6;
  return 0;
}

class Printer {
public:
  std::string print(const Program& prog)
  {
    for (const StructDecl& s : prog.structs) print_struct(s);
    for (const EnumDecl& e : prog.enums) print_enum(e);
    for (const FunctionDecl& f : prog.functions) print_fn(f);
    return os_.str();
  }

  std::string expr_str(const Expr& e)
  {
    print_expr_prec(e, 0);
    return os_.str();
  }

private:
  std::ostringstream os_;
  int indent_ = 0;

  void nl()
  {
    os_ << "\n";
    for (int i = 0; i < indent_; ++i) os_ << "    ";
  }

  void print_struct(const StructDecl& s)
  {
    if (s.thread_shared) {
      os_ << "#[thread_shared]";
      nl();
    }
    for (const CapabilityAnnotation& a : s.annotations) {
      os_ << "#[capable(&";
      if (a.mut_receiver) os_ << "mut ";
      os_ << "self";
      if (a.cond) {
        os_ << " if ";
        print_expr_prec(*a.cond, 0);
      }
      os_ << " => " << a.kind << "(";
      print_expr_prec(*a.target, 0);
      os_ << "))]";
      nl();
    }
    os_ << "struct " << s.name;
    print_generics(s.generics);
    if (s.fields.empty()) {
      os_ << ";";
    } else {
      os_ << " {";
      ++indent_;
      for (const FieldDecl& f : s.fields) {
        nl();
        os_ << f.name << ": " << print_type(f.type) << ",";
      }
      --indent_;
      nl();
      os_ << "}";
    }
    nl();
    nl();
  }

  void print_enum(const EnumDecl& e)
  {
    os_ << "enum " << e.name;
    print_generics(e.generics);
    os_ << " {";
    ++indent_;
    for (const VariantDecl& v : e.variants) {
      nl();
      os_ << v.name;
      if (v.payload) os_ << "(" << print_type(*v.payload) << ")";
      os_ << ",";
    }
    --indent_;
    nl();
    os_ << "}";
    nl();
    nl();
  }

  void print_generics(const std::vector<std::string>& generics)
  {
    if (generics.empty()) return;
    os_ << "<";
    for (size_t i = 0; i < generics.size(); ++i) {
      if (i) os_ << ", ";
      os_ << generics[i];
    }
    os_ << ">";
  }

  void print_fn(const FunctionDecl& f)
  {
    // Methods print inside a one-function impl block; parsing merges them.
    bool method = !f.self_type.empty();
    std::vector<std::string> impl_generics;
    if (method) {
      impl_generics = f.generics;
      os_ << "impl";
      print_generics(impl_generics);
      os_ << " " << f.self_type << " {";
      ++indent_;
      nl();
    }
    switch (f.purity) {
      case Purity::None: break;
      case Purity::Value: os_ << "#[pure]"; nl(); break;
      case Purity::Memory: os_ << "#[pure_memory]"; nl(); break;
      case Purity::Unstable: os_ << "#[pure_unstable]"; nl(); break;
    }
    if (f.ghost) {
      os_ << "#[ghost_fn]";
      nl();
    }
    for (const ExprPtr& r : f.requires_) {
      os_ << "#[requires(";
      print_expr_prec(*r, 0);
      os_ << ")]";
      nl();
    }
    for (const ExprPtr& e : f.ensures_) {
      os_ << "#[ensures(";
      print_expr_prec(*e, 0);
      os_ << ")]";
      nl();
    }
    os_ << "fn " << f.name;
    if (!method) print_generics(f.generics);
    os_ << "(";
    for (size_t i = 0; i < f.params.size(); ++i) {
      if (i) os_ << ", ";
      const Param& p = f.params[i];
      if (method && p.name == "self") {
        if (p.type.kind == TypeKind::SharedRef) {
          os_ << "&self";
        } else if (p.type.kind == TypeKind::MutRef) {
          os_ << "&mut self";
        } else {
          os_ << "self";
        }
      } else {
        os_ << p.name << ": " << print_type(p.type);
      }
    }
    os_ << ")";
    if (!f.ret.is_unit()) os_ << " -> " << print_type(f.ret);
    if (!f.body) {
      os_ << ";";
    } else {
      os_ << " ";
      print_block(*f.body);
    }
    if (method) {
      --indent_;
      nl();
      os_ << "}";
    }
    nl();
    nl();
  }

  void print_block(const std::vector<Stmt>& stmts)
  {
    os_ << "{";
    ++indent_;
    for (const Stmt& s : stmts) {
      nl();
      print_stmt(s);
    }
    --indent_;
    nl();
    os_ << "}";
  }

  void print_stmt(const Stmt& s)
  {
    switch (s.kind) {
      case StmtKind::Let:
        os_ << "let " << s.let_name;
        if (s.let_type) os_ << ": " << print_type(*s.let_type);
        os_ << " = ";
        print_expr_prec(*s.expr, 0);
        os_ << ";";
        break;
      case StmtKind::LetElse:
        os_ << "let " << s.let_ctor << "(" << s.let_name << ") = ";
        print_expr_prec(*s.expr, 0);
        os_ << " else ";
        print_block(s.then_block);
        os_ << ";";
        break;
      case StmtKind::Assign:
        os_ << s.target.str() << " = ";
        print_expr_prec(*s.expr, 0);
        os_ << ";";
        break;
      case StmtKind::Assert:
        os_ << "assert!(";
        print_expr_prec(*s.expr, 0);
        os_ << ");";
        break;
      case StmtKind::If:
        os_ << "if ";
        print_expr_prec(*s.expr, 0);
        os_ << " ";
        print_block(s.then_block);
        if (!s.else_block.empty()) {
          os_ << " else ";
          print_block(s.else_block);
        }
        break;
      case StmtKind::Match:
        os_ << "match ";
        print_expr_prec(*s.expr, 0);
        os_ << " {";
        ++indent_;
        for (const MatchArm& arm : s.arms) {
          nl();
          os_ << arm.ctor;
          if (arm.binder) os_ << "(" << *arm.binder << ")";
          os_ << " => ";
          print_block(arm.block);
          os_ << ",";
        }
        --indent_;
        nl();
        os_ << "}";
        break;
      case StmtKind::Drop:
        os_ << "drop(" << s.target.str() << ");";
        break;
      case StmtKind::Return:
        os_ << "return";
        if (s.expr) {
          os_ << " ";
          print_expr_prec(*s.expr, 0);
        }
        os_ << ";";
        break;
      case StmtKind::ExprStmt:
        print_expr_prec(*s.expr, 0);
        os_ << ";";
        break;
    }
  }

  void print_expr_prec(const Expr& e, int parent_prec)
  {
    switch (e.kind) {
      case ExprKind::IntLit: os_ << e.int_val; break;
      case ExprKind::BoolLit: os_ << (e.bool_val ? "true" : "false"); break;
      case ExprKind::UnitLit: os_ << "()"; break;
      case ExprKind::PlaceRead: os_ << e.place.str(); break;
      case ExprKind::AddrOf:
        os_ << "&" << (e.addr_mut ? "mut " : "") << e.place.str();
        break;
      case ExprKind::Unary:
        os_ << e.op;
        print_expr_prec(*e.args[0], 7);
        break;
      case ExprKind::Binary: {
        int prec = binary_prec(e.op);
        bool paren = prec < parent_prec
                     || (prec == parent_prec && prec == 4);  // comparisons do not chain
        if (paren) os_ << "(";
        print_expr_prec(*e.args[0], prec);
        os_ << " " << e.op << " ";
        print_expr_prec(*e.args[1], prec + 1);
        if (paren) os_ << ")";
        break;
      }
      case ExprKind::Call:
      case ExprKind::Ctor: {
        os_ << e.callee;
        os_ << "(";
        for (size_t i = 0; i < e.args.size(); ++i) {
          if (i) os_ << ", ";
          print_expr_prec(*e.args[i], 0);
        }
        os_ << ")";
        break;
      }
      case ExprKind::MethodCall: {
        print_expr_prec(*e.args[0], 8);
        os_ << "." << e.callee << "(";
        for (size_t i = 1; i < e.args.size(); ++i) {
          if (i > 1) os_ << ", ";
          print_expr_prec(*e.args[i], 0);
        }
        os_ << ")";
        break;
      }
      case ExprKind::Cast:
        print_expr_prec(*e.args[0], 7);
        os_ << " as " << print_type(e.cast_type);
        break;
      case ExprKind::DerefBuiltin:
        os_ << "deref(";
        print_expr_prec(*e.args[0], 0);
        os_ << ")";
        break;
      case ExprKind::DerefValue:
        os_ << "*";
        print_expr_prec(*e.args[0], 7);
        break;
      case ExprKind::Old:
        os_ << "old(";
        print_expr_prec(*e.args[0], 0);
        os_ << ")";
        break;
      case ExprKind::Result: os_ << "result"; break;
    }
  }
};

}  // namespace

std::string print_program(const Program& prog)
{
  Printer p;
  return p.print(prog);
}

std::string print_expr(const Expr& e)
{
  Printer p;
  return p.expr_str(e);
}

std::string print_type(const TypeExpr& t)
{
  return type_key(t);
}

}  // namespace caplet

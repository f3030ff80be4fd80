#include "caplet/parser.hpp"

#include <cassert>
#include <set>

namespace caplet {

namespace {

void paramize_type(caplet::TypeExpr& t, const std::set<std::string>& generics)
{
  if (t.kind == caplet::TypeKind::Named && t.args.empty() && generics.count(t.name)) {
    t.kind = caplet::TypeKind::Param;
    return;
  }
  for (caplet::TypeExpr& a : t.args) paramize_type(a, generics);
}

void paramize_expr(caplet::Expr& e, const std::set<std::string>& generics)
{
  paramize_type(e.cast_type, generics);
  for (caplet::ExprPtr& a : e.args) paramize_expr(*a, generics);
}

void paramize_stmt(caplet::Stmt& s, const std::set<std::string>& generics)
{
  if (s.let_type) paramize_type(*s.let_type, generics);
  if (s.expr) paramize_expr(*s.expr, generics);
  for (caplet::Stmt& t : s.then_block) paramize_stmt(t, generics);
  for (caplet::Stmt& t : s.else_block) paramize_stmt(t, generics);
  for (caplet::MatchArm& arm : s.arms)
    for (caplet::Stmt& t : arm.block) paramize_stmt(t, generics);
}

void paramize_fn(caplet::FunctionDecl& fn)
{
  std::set<std::string> g(fn.generics.begin(), fn.generics.end());
  if (g.empty()) return;
  for (caplet::Param& p : fn.params) paramize_type(p.type, g);
  paramize_type(fn.ret, g);
  for (caplet::ExprPtr& e : fn.requires_) paramize_expr(*e, g);
  for (caplet::ExprPtr& e : fn.ensures_) paramize_expr(*e, g);
  if (fn.body)
    for (caplet::Stmt& s : *fn.body) paramize_stmt(s, g);
}

void paramize_annotation(caplet::CapabilityAnnotation& ann,
                         const std::set<std::string>& generics)
{
  if (ann.cond) paramize_expr(*ann.cond, generics);
  paramize_expr(*ann.target, generics);
}

}  // namespace

namespace {

struct Attributes {
  std::vector<ExprPtr> requires_;
  std::vector<ExprPtr> ensures_;
  std::vector<CapabilityAnnotation> capabilities;
  Purity purity = Purity::None;
  bool ghost = false;
  bool thread_shared = false;
};

class Parser {
public:
  Parser(std::string file, const std::vector<Token>& toks)
    : file_(std::move(file)), toks_(toks)
  {}

  Program parse()
  {
    Program prog;
    prog.file = file_;
    while (!at_end()) {
      Attributes attrs = parse_attributes();
      const Token& t = peek();
      if (t.kind != Tok::Ident)
        fail(t.loc, "expected item");
      if (t.text == "struct") {
        prog.structs.push_back(parse_struct(std::move(attrs)));
      } else if (t.text == "enum") {
        require_plain(attrs, t.loc, "enum");
        prog.enums.push_back(parse_enum());
      } else if (t.text == "impl") {
        parse_impl(std::move(attrs), prog);
      } else if (t.text == "fn") {
        prog.functions.push_back(parse_fn(std::move(attrs), ""));
      } else {
        fail(t.loc, "expected struct, enum, impl or fn, found '" + t.text + "'");
      }
    }
    return prog;
  }

private:
  std::string file_;
  const std::vector<Token>& toks_;
  size_t pos_ = 0;

  [[noreturn]] void fail(Loc loc, const std::string& msg) const
  {
    throw CapletError(file_, loc, msg);
  }

  const Token& peek(size_t ahead = 0) const
  {
    size_t i = pos_ + ahead;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  bool at_end() const { return peek().kind == Tok::End; }
  const Token& next() { return toks_[pos_++]; }

  bool is_punct(const char* p, size_t ahead = 0) const
  {
    const Token& t = peek(ahead);
    return t.kind == Tok::Punct && t.text == p;
  }
  bool is_ident(const char* w, size_t ahead = 0) const
  {
    const Token& t = peek(ahead);
    return t.kind == Tok::Ident && t.text == w;
  }
  bool eat_punct(const char* p)
  {
    if (!is_punct(p)) return false;
    ++pos_;
    return true;
  }
  bool eat_ident(const char* w)
  {
    if (!is_ident(w)) return false;
    ++pos_;
    return true;
  }
  void expect_punct(const char* p)
  {
    if (!eat_punct(p))
      fail(peek().loc, std::string("expected '") + p + "', found '" + peek().text + "'");
  }
  void expect_ident(const char* w)
  {
    if (!eat_ident(w))
      fail(peek().loc, std::string("expected '") + w + "', found '" + peek().text + "'");
  }
  std::string expect_name(const char* what)
  {
    if (peek().kind != Tok::Ident)
      fail(peek().loc, std::string("expected ") + what);
    return next().text;
  }

  // -------------------------------------------------------------- attributes

  Attributes parse_attributes()
  {
    Attributes attrs;
    while (is_punct("#")) {
      next();
      expect_punct("[");
      Loc loc = peek().loc;
      std::string name = expect_name("attribute name");
      if (name == "pure") {
        attrs.purity = Purity::Value;
      } else if (name == "pure_memory") {
        attrs.purity = Purity::Memory;
      } else if (name == "pure_unstable") {
        attrs.purity = Purity::Unstable;
      } else if (name == "ghost_fn") {
        attrs.ghost = true;
      } else if (name == "thread_shared") {
        attrs.thread_shared = true;
      } else if (name == "requires") {
        expect_punct("(");
        attrs.requires_.push_back(parse_expr());
        expect_punct(")");
      } else if (name == "ensures") {
        expect_punct("(");
        attrs.ensures_.push_back(parse_expr());
        expect_punct(")");
      } else if (name == "capable") {
        expect_punct("(");
        attrs.capabilities.push_back(parse_capable(loc));
        expect_punct(")");
      } else {
        fail(loc, "unknown attribute '" + name + "'");
      }
      expect_punct("]");
    }
    return attrs;
  }

  CapabilityAnnotation parse_capable(Loc loc)
  {
    CapabilityAnnotation ann;
    ann.loc = loc;
    expect_punct("&");
    ann.mut_receiver = eat_ident("mut");
    expect_ident("self");
    if (eat_ident("if")) ann.cond = parse_expr();
    expect_punct("=>");
    Loc kloc = peek().loc;
    ann.kind = expect_name("capability kind");
    CapKindDummyCheck(kloc, ann.kind);
    expect_punct("(");
    ann.target = parse_expr();
    expect_punct(")");
    return ann;
  }

  void CapKindDummyCheck(Loc loc, const std::string& kind)
  {
    static const char* kinds[] = {"readRef", "writeRef", "read", "write", "immutable",
                                  "unique", "local", "noReadRef", "noWriteRef"};
    for (const char* k : kinds)
      if (kind == k) return;
    fail(loc, "unknown capability kind '" + kind + "'");
  }

  void require_plain(const Attributes& attrs, Loc loc, const char* what)
  {
    if (!attrs.requires_.empty() || !attrs.ensures_.empty() || !attrs.capabilities.empty()
        || attrs.purity != Purity::None || attrs.ghost || attrs.thread_shared)
      fail(loc, std::string("attributes are not allowed on ") + what);
  }

  // -------------------------------------------------------------------- items

  std::vector<std::string> parse_generics_opt()
  {
    std::vector<std::string> out;
    if (!eat_punct("<")) return out;
    do {
      out.push_back(expect_name("type parameter"));
    } while (eat_punct(","));
    expect_punct(">");
    return out;
  }

  StructDecl parse_struct(Attributes attrs)
  {
    StructDecl s;
    s.file = file_;
    if (!attrs.requires_.empty() || !attrs.ensures_.empty() || attrs.purity != Purity::None
        || attrs.ghost)
      fail(peek().loc, "only capable/thread_shared attributes are allowed on struct");
    s.annotations = std::move(attrs.capabilities);
    s.thread_shared = attrs.thread_shared;
    expect_ident("struct");
    s.loc = peek().loc;
    s.name = expect_name("struct name");
    s.generics = parse_generics_opt();
    std::set<std::string> gset(s.generics.begin(), s.generics.end());
    if (eat_punct(";")) {
      for (CapabilityAnnotation& a : s.annotations) paramize_annotation(a, gset);
      return s;
    }
    expect_punct("{");
    while (!is_punct("}")) {
      FieldDecl f;
      f.loc = peek().loc;
      f.name = expect_name("field name");
      expect_punct(":");
      f.type = parse_type();
      paramize_type(f.type, gset);
      s.fields.push_back(std::move(f));
      if (!eat_punct(",")) break;
    }
    expect_punct("}");
    for (CapabilityAnnotation& a : s.annotations) paramize_annotation(a, gset);
    return s;
  }

  EnumDecl parse_enum()
  {
    EnumDecl e;
    expect_ident("enum");
    e.loc = peek().loc;
    e.name = expect_name("enum name");
    e.generics = parse_generics_opt();
    expect_punct("{");
    while (!is_punct("}")) {
      VariantDecl v;
      v.loc = peek().loc;
      v.name = expect_name("variant name");
      if (eat_punct("(")) {
        v.payload = parse_type();
        std::set<std::string> gset(e.generics.begin(), e.generics.end());
        paramize_type(*v.payload, gset);
        expect_punct(")");
      }
      e.variants.push_back(std::move(v));
      if (!eat_punct(",")) break;
    }
    expect_punct("}");
    return e;
  }

  void parse_impl(Attributes attrs, Program& prog)
  {
    expect_ident("impl");
    std::vector<std::string> generics = parse_generics_opt();
    Loc loc = peek().loc;
    std::string type_name = expect_name("type name");
    // The generic arguments after the type name must repeat the impl's
    // parameters; they carry no extra information here.
    if (eat_punct("<")) {
      do {
        parse_type();
      } while (eat_punct(","));
      expect_punct(">");
    }
    if (!attrs.capabilities.empty() || attrs.thread_shared) {
      // Annotations on an impl block attach to the type declaration.
      StructDecl* target = nullptr;
      for (StructDecl& s : prog.structs)
        if (s.name == type_name) target = &s;
      if (!target) fail(loc, "impl annotations target unknown struct '" + type_name + "'");
      std::set<std::string> gset(generics.begin(), generics.end());
      for (auto& a : attrs.capabilities) {
        paramize_annotation(a, gset);
        target->annotations.push_back(std::move(a));
      }
      target->thread_shared = target->thread_shared || attrs.thread_shared;
    }
    if (!attrs.requires_.empty() || !attrs.ensures_.empty() || attrs.purity != Purity::None
        || attrs.ghost)
      fail(loc, "function attributes are not allowed on impl blocks");
    expect_punct("{");
    while (!is_punct("}")) {
      Attributes fn_attrs = parse_attributes();
      FunctionDecl fn = parse_fn(std::move(fn_attrs), type_name, generics);
      prog.functions.push_back(std::move(fn));
    }
    expect_punct("}");
  }

  FunctionDecl parse_fn(Attributes attrs, const std::string& self_type,
                        const std::vector<std::string>& outer_generics = {})
  {
    FunctionDecl fn;
    fn.file = file_;
    fn.self_type = self_type;
    fn.generics = outer_generics;
    fn.requires_ = std::move(attrs.requires_);
    fn.ensures_ = std::move(attrs.ensures_);
    fn.purity = attrs.purity;
    fn.ghost = attrs.ghost;
    if (!attrs.capabilities.empty())
      fail(peek().loc, "capable annotations belong on types, not functions");
    expect_ident("fn");
    fn.loc = peek().loc;
    fn.name = expect_name("function name");
    for (const std::string& g : parse_generics_opt()) fn.generics.push_back(g);
    expect_punct("(");
    while (!is_punct(")")) {
      Param p;
      p.loc = peek().loc;
      if (is_punct("&")) {
        // &self / &mut self shorthand.
        next();
        bool is_mut = eat_ident("mut");
        expect_ident("self");
        if (self_type.empty()) fail(p.loc, "self parameter outside impl block");
        p.name = "self";
        TypeExpr self_ty = self_type_expr(self_type, fn.generics);
        p.type = is_mut ? type_mut_ref(self_ty) : type_shared_ref(self_ty);
      } else if (is_ident("self")) {
        next();
        if (self_type.empty()) fail(p.loc, "self parameter outside impl block");
        p.name = "self";
        p.type = self_type_expr(self_type, fn.generics);
      } else {
        eat_ident("mut");  // binding mutability is not tracked
        p.name = expect_name("parameter name");
        expect_punct(":");
        p.type = parse_type();
      }
      fn.params.push_back(std::move(p));
      if (!eat_punct(",")) break;
    }
    expect_punct(")");
    if (eat_punct("->")) fn.ret = parse_type();
    if (eat_punct(";")) {
      paramize_fn(fn);
      return fn;
    }
    fn.body = parse_block();
    paramize_fn(fn);
    return fn;
  }

  static TypeExpr self_type_expr(const std::string& name,
                                 const std::vector<std::string>& generics)
  {
    TypeExpr t;
    t.kind = TypeKind::Named;
    t.name = name;
    for (const std::string& g : generics) {
      TypeExpr p;
      p.kind = TypeKind::Param;
      p.name = g;
      t.args.push_back(std::move(p));
    }
    return t;
  }

  // -------------------------------------------------------------------- types

  TypeExpr parse_type()
  {
    const Token& t = peek();
    if (eat_punct("&")) {
      bool is_mut = eat_ident("mut");
      TypeExpr inner = parse_type();
      return is_mut ? type_mut_ref(std::move(inner)) : type_shared_ref(std::move(inner));
    }
    if (eat_punct("*")) {
      bool is_mut;
      if (eat_ident("mut")) {
        is_mut = true;
      } else if (eat_ident("const")) {
        is_mut = false;
      } else {
        fail(peek().loc, "expected 'mut' or 'const' after '*'");
      }
      return type_raw_ptr(parse_type(), is_mut);
    }
    if (eat_punct("(")) {
      TypeExpr tup;
      tup.kind = TypeKind::Tuple;
      if (eat_punct(")")) return tup;  // unit
      tup.args.push_back(parse_type());
      while (eat_punct(",")) tup.args.push_back(parse_type());
      expect_punct(")");
      if (tup.args.size() == 1)
        fail(t.loc, "parenthesized types need at least two elements");
      return tup;
    }
    if (t.kind != Tok::Ident) fail(t.loc, "expected type");
    std::string name = next().text;
    if (name == "i32") return type_int();
    if (name == "bool") return type_bool();
    TypeExpr ty;
    ty.kind = name == "UnsafeCellOf" ? TypeKind::UnsafeCell : TypeKind::Named;
    ty.name = name == "UnsafeCellOf" ? "" : name;
    if (eat_punct("<")) {
      do {
        ty.args.push_back(parse_type());
      } while (eat_punct(","));
      expect_punct(">");
    }
    if (ty.kind == TypeKind::UnsafeCell && ty.args.size() != 1)
      fail(t.loc, "UnsafeCellOf takes exactly one type argument");
    return ty;
  }

  // --------------------------------------------------------------- statements

  std::vector<Stmt> parse_block()
  {
    expect_punct("{");
    std::vector<Stmt> stmts;
    while (!is_punct("}")) stmts.push_back(parse_stmt());
    expect_punct("}");
    return stmts;
  }

  Stmt parse_stmt()
  {
    Loc loc = peek().loc;
    if (is_ident("let")) return parse_let();
    if (is_ident("assert")) {
      next();
      expect_punct("!");
      expect_punct("(");
      Stmt s;
      s.kind = StmtKind::Assert;
      s.loc = loc;
      s.expr = parse_expr();
      expect_punct(")");
      expect_punct(";");
      return s;
    }
    if (is_ident("drop") && is_punct("(", 1)) {
      next();
      next();
      Stmt s;
      s.kind = StmtKind::Drop;
      s.loc = loc;
      s.target = parse_place();
      expect_punct(")");
      expect_punct(";");
      return s;
    }
    if (is_ident("return")) {
      next();
      Stmt s;
      s.kind = StmtKind::Return;
      s.loc = loc;
      if (!is_punct(";")) s.expr = parse_expr();
      expect_punct(";");
      return s;
    }
    if (is_ident("if")) {
      next();
      Stmt s;
      s.kind = StmtKind::If;
      s.loc = loc;
      s.expr = parse_expr();
      s.then_block = parse_block();
      if (eat_ident("else")) s.else_block = parse_block();
      return s;
    }
    if (is_ident("match")) {
      next();
      Stmt s;
      s.kind = StmtKind::Match;
      s.loc = loc;
      s.expr = parse_expr();
      expect_punct("{");
      while (!is_punct("}")) {
        MatchArm arm;
        arm.loc = peek().loc;
        if (eat_punct("_")) {
          arm.ctor = "_";
        } else {
          arm.ctor = expect_name("variant pattern");
          if (eat_punct("(")) {
            arm.binder = expect_name("binder");
            expect_punct(")");
          }
        }
        expect_punct("=>");
        arm.block = parse_block();
        if (!eat_punct(",")) {
          // trailing comma optional before }
        }
        s.arms.push_back(std::move(arm));
      }
      expect_punct("}");
      return s;
    }
    // Either `place = expr;` or `expr;`.
    ExprPtr e = parse_expr();
    if (is_punct("=")) {
      Place p;
      if (!expr_to_place(*e, p))
        fail(loc, "assignment target is not a place");
      next();
      Stmt s;
      s.kind = StmtKind::Assign;
      s.loc = loc;
      s.target = std::move(p);
      s.expr = parse_expr();
      expect_punct(";");
      return s;
    }
    expect_punct(";");
    Stmt s;
    s.kind = StmtKind::ExprStmt;
    s.loc = loc;
    s.expr = std::move(e);
    return s;
  }

  Stmt parse_let()
  {
    Loc loc = peek().loc;
    expect_ident("let");
    // `let Ctor(name) = expr else { ... };` when an uppercase name is
    // followed by '('.
    if (peek().kind == Tok::Ident && std::isupper((unsigned char)peek().text[0])
        && is_punct("(", 1)) {
      Stmt s;
      s.kind = StmtKind::LetElse;
      s.loc = loc;
      s.let_ctor = next().text;
      expect_punct("(");
      s.let_name = expect_name("binder");
      expect_punct(")");
      expect_punct("=");
      s.expr = parse_expr();
      expect_ident("else");
      s.then_block = parse_block();
      expect_punct(";");
      return s;
    }
    Stmt s;
    s.kind = StmtKind::Let;
    s.loc = loc;
    eat_ident("mut");
    s.let_name = expect_name("binder");
    if (eat_punct(":")) s.let_type = parse_type();
    expect_punct("=");
    s.expr = parse_expr();
    expect_punct(";");
    return s;
  }

  Place parse_place()
  {
    Place p;
    p.loc = peek().loc;
    while (eat_punct("*")) p.projs.push_back({Projection::Deref, ""});
    // Dereferences written prefix apply innermost-last; reverse below once
    // the base is known.
    p.base = expect_name("place");
    std::vector<Projection> prefix = std::move(p.projs);
    p.projs.clear();
    while (is_punct(".")) {
      next();
      if (peek().kind == Tok::Int) {
        p.projs.push_back({Projection::Field, next().text});
      } else {
        p.projs.push_back({Projection::Field, expect_name("field name")});
      }
    }
    // `**x.f` means deref(deref(x.f)) in this grammar? No: prefix derefs bind
    // the whole postfix chain, so they are applied after the fields.
    for (auto it = prefix.rbegin(); it != prefix.rend(); ++it) p.projs.push_back(*it);
    return p;
  }

  static bool expr_to_place(const Expr& e, Place& out)
  {
    if (e.kind == ExprKind::PlaceRead) {
      out = e.place;
      return true;
    }
    if (e.kind == ExprKind::DerefValue && e.args.size() == 1) {
      if (!expr_to_place(*e.args[0], out)) return false;
      out.projs.push_back({Projection::Deref, ""});
      return true;
    }
    return false;
  }

  // -------------------------------------------------------------- expressions

  ExprPtr parse_expr() { return parse_implies(); }

  ExprPtr parse_implies()
  {
    ExprPtr lhs = parse_or();
    if (is_punct("==>")) {
      Loc loc = next().loc;
      ExprPtr rhs = parse_implies();
      auto e = std::make_unique<Expr>(ExprKind::Binary, loc);
      e->op = "==>";
      e->args.push_back(std::move(lhs));
      e->args.push_back(std::move(rhs));
      return e;
    }
    return lhs;
  }

  ExprPtr parse_or()
  {
    ExprPtr lhs = parse_and();
    while (is_punct("||")) {
      Loc loc = next().loc;
      auto e = std::make_unique<Expr>(ExprKind::Binary, loc);
      e->op = "||";
      e->args.push_back(std::move(lhs));
      e->args.push_back(parse_and());
      lhs = std::move(e);
    }
    return lhs;
  }

  ExprPtr parse_and()
  {
    ExprPtr lhs = parse_cmp();
    while (is_punct("&&")) {
      Loc loc = next().loc;
      auto e = std::make_unique<Expr>(ExprKind::Binary, loc);
      e->op = "&&";
      e->args.push_back(std::move(lhs));
      e->args.push_back(parse_cmp());
      lhs = std::move(e);
    }
    return lhs;
  }

  ExprPtr parse_cmp()
  {
    ExprPtr lhs = parse_add();
    for (const char* op : {"====", "==", "!=", "<=", ">=", "<", ">"}) {
      if (is_punct(op)) {
        Loc loc = next().loc;
        auto e = std::make_unique<Expr>(ExprKind::Binary, loc);
        e->op = op;
        e->args.push_back(std::move(lhs));
        e->args.push_back(parse_add());
        return e;
      }
    }
    return lhs;
  }

  ExprPtr parse_add()
  {
    ExprPtr lhs = parse_mul();
    while (is_punct("+") || is_punct("-")) {
      Loc loc = peek().loc;
      std::string op = next().text;
      auto e = std::make_unique<Expr>(ExprKind::Binary, loc);
      e->op = op;
      e->args.push_back(std::move(lhs));
      e->args.push_back(parse_mul());
      lhs = std::move(e);
    }
    return lhs;
  }

  ExprPtr parse_mul()
  {
    ExprPtr lhs = parse_cast();
    while (is_punct("*")) {
      Loc loc = next().loc;
      auto e = std::make_unique<Expr>(ExprKind::Binary, loc);
      e->op = "*";
      e->args.push_back(std::move(lhs));
      e->args.push_back(parse_cast());
      lhs = std::move(e);
    }
    return lhs;
  }

  ExprPtr parse_cast()
  {
    ExprPtr e = parse_unary();
    while (is_ident("as")) {
      Loc loc = next().loc;
      auto c = std::make_unique<Expr>(ExprKind::Cast, loc);
      c->cast_type = parse_type();
      c->args.push_back(std::move(e));
      e = std::move(c);
    }
    return e;
  }

  ExprPtr parse_unary()
  {
    Loc loc = peek().loc;
    if (eat_punct("!")) {
      auto e = std::make_unique<Expr>(ExprKind::Unary, loc);
      e->op = "!";
      e->args.push_back(parse_unary());
      return e;
    }
    if (eat_punct("-")) {
      auto e = std::make_unique<Expr>(ExprKind::Unary, loc);
      e->op = "-";
      e->args.push_back(parse_unary());
      return e;
    }
    if (eat_punct("*")) {
      auto e = std::make_unique<Expr>(ExprKind::DerefValue, loc);
      e->args.push_back(parse_unary());
      return e;
    }
    if (eat_punct("&")) {
      bool is_mut = eat_ident("mut");
      ExprPtr inner = parse_unary();
      Place p;
      if (!expr_to_place(*inner, p))
        fail(loc, "'&' expects a place");
      auto e = std::make_unique<Expr>(ExprKind::AddrOf, loc);
      e->addr_mut = is_mut;
      e->place = std::move(p);
      return e;
    }
    return parse_postfix();
  }

  ExprPtr parse_postfix()
  {
    ExprPtr e = parse_primary();
    while (is_punct(".")) {
      next();
      Loc loc = peek().loc;
      std::string name;
      if (peek().kind == Tok::Int) {
        name = next().text;
      } else {
        name = expect_name("field or method name");
      }
      if (eat_punct("(")) {
        auto call = std::make_unique<Expr>(ExprKind::MethodCall, loc);
        call->callee = name;
        call->args.push_back(std::move(e));  // receiver first
        while (!is_punct(")")) {
          call->args.push_back(parse_expr());
          if (!eat_punct(",")) break;
        }
        expect_punct(")");
        e = std::move(call);
      } else {
        // Field projection extends a place read.
        if (e->kind != ExprKind::PlaceRead)
          fail(loc, "field access requires a place");
        e->place.projs.push_back({Projection::Field, name});
      }
    }
    return e;
  }

  ExprPtr parse_primary()
  {
    const Token& t = peek();
    Loc loc = t.loc;
    if (t.kind == Tok::Int) {
      next();
      auto e = std::make_unique<Expr>(ExprKind::IntLit, loc);
      e->int_val = t.int_val;
      return e;
    }
    if (eat_ident("true")) {
      auto e = std::make_unique<Expr>(ExprKind::BoolLit, loc);
      e->bool_val = true;
      return e;
    }
    if (eat_ident("false")) {
      auto e = std::make_unique<Expr>(ExprKind::BoolLit, loc);
      e->bool_val = false;
      return e;
    }
    if (eat_punct("(")) {
      if (eat_punct(")")) return std::make_unique<Expr>(ExprKind::UnitLit, loc);
      ExprPtr e = parse_expr();
      expect_punct(")");
      return e;
    }
    if (is_ident("deref") && is_punct("(", 1)) {
      next();
      next();
      auto e = std::make_unique<Expr>(ExprKind::DerefBuiltin, loc);
      e->args.push_back(parse_expr());
      expect_punct(")");
      return e;
    }
    if (is_ident("old") && is_punct("(", 1)) {
      next();
      next();
      auto e = std::make_unique<Expr>(ExprKind::Old, loc);
      e->args.push_back(parse_expr());
      expect_punct(")");
      return e;
    }
    if (is_ident("result")) {
      next();
      return std::make_unique<Expr>(ExprKind::Result, loc);
    }
    if (t.kind != Tok::Ident) fail(loc, "expected expression, found '" + t.text + "'");
    std::string name = next().text;
    if (eat_punct("::")) {
      name += "::" + expect_name("name after '::'");
    }
    if (eat_punct("(")) {
      auto call = std::make_unique<Expr>(ExprKind::Call, loc);
      call->callee = name;
      while (!is_punct(")")) {
        call->args.push_back(parse_expr());
        if (!eat_punct(",")) break;
      }
      expect_punct(")");
      return call;
    }
    auto e = std::make_unique<Expr>(ExprKind::PlaceRead, loc);
    e->place.base = name;
    e->place.loc = loc;
    return e;
  }
};

}  // namespace

ParsedFile parse_file(const std::string& file, const std::string& source)
{
  LexResult lexed = lex(file, source);
  Parser parser(file, lexed.tokens);
  ParsedFile out;
  out.program = parser.parse();
  out.expectations = std::move(lexed.expectations);
  return out;
}

Program parse_program(const std::string& file, const std::string& source)
{
  return parse_file(file, source).program;
}

}  // namespace caplet

// AST for the Caplet core language: types, places, expressions, statements
// and declarations. The same expression tree is used for executable code and
// for specifications; spec-only nodes (old, result, deref, ====) are rejected
// outside contracts during type checking.
#ifndef CAPLET_AST_HPP
#define CAPLET_AST_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "caplet/diag.hpp"

namespace caplet {

// ---------------------------------------------------------------------------
// Types

enum class TypeKind {
  Int,         // i32
  Bool,
  SharedRef,   // &T
  MutRef,      // &mut T
  RawPtr,      // *const T / *mut T
  Named,       // struct or enum, possibly generic
  Tuple,       // (T1, ..., Tn); () is the empty tuple
  UnsafeCell,  // UnsafeCellOf<T>, only inside library type declarations
  Param,       // generic parameter, gone after monomorphization
};

struct TypeExpr {
  TypeKind kind = TypeKind::Tuple;
  bool ptr_mut = false;          // RawPtr only
  std::string name;              // Named / Param
  std::vector<TypeExpr> args;    // element type(s) / generic arguments

  bool operator==(const TypeExpr&) const = default;

  bool is_unit() const { return kind == TypeKind::Tuple && args.empty(); }
  bool is_ref() const { return kind == TypeKind::SharedRef || kind == TypeKind::MutRef; }
};

TypeExpr type_int();
TypeExpr type_bool();
TypeExpr type_unit();
TypeExpr type_shared_ref(TypeExpr inner);
TypeExpr type_mut_ref(TypeExpr inner);
TypeExpr type_raw_ptr(TypeExpr inner, bool is_mut);

// Canonical printed form, e.g. "&Cell<i32>", "*mut i32", "(i32, bool)".
// Used as a map key and as the basis for SMT name mangling.
std::string type_key(const TypeExpr& t);

// ---------------------------------------------------------------------------
// Places

struct Projection {
  enum Kind { Deref, Field } kind = Deref;
  std::string field;  // Field only

  bool operator==(const Projection&) const = default;
};

struct Place {
  std::string base;
  std::vector<Projection> projs;
  Loc loc;

  bool same_path(const Place& other) const
  {
    return base == other.base && projs == other.projs;
  }
  std::string str() const;
};

// ---------------------------------------------------------------------------
// Expressions

enum class ExprKind {
  IntLit,
  BoolLit,
  UnitLit,
  PlaceRead,    // read of a place (copy or move decided by type checking)
  AddrOf,       // &place / &mut place
  Unary,        // ! -
  Binary,       // + - * == != < <= > >= && || ==> ====
  Call,         // free/path call or resolved method call
  MethodCall,   // receiver.method(args); resolved to Call by type checking
  Cast,         // expr as *const T / *mut T
  DerefBuiltin, // deref(ptr-expr), specs only
  DerefValue,   // *expr where expr has reference type (read through it)
  Old,          // old(expr), ensures only
  Result,       // `result`, ensures only
  Ctor,         // enum constructor: Some(e), None, Ok(e), Err(e)
};

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
  ExprKind kind = ExprKind::UnitLit;
  Loc loc;

  long long int_val = 0;
  bool bool_val = false;
  std::string op;         // Unary/Binary operator spelling
  std::string callee;     // Call: "get", "Arc::strong_count"; Ctor: variant name
  Place place;            // PlaceRead / AddrOf
  bool addr_mut = false;  // AddrOf: &mut
  std::vector<ExprPtr> args;
  TypeExpr cast_type;     // Cast target

  // Filled by type checking.
  TypeExpr type;
  std::string resolved;   // Call/Ctor: mangled instance name of the callee

  Expr() = default;
  Expr(ExprKind k, Loc l) : kind(k), loc(l) {}
};

ExprPtr clone_expr(const Expr& e);

// ---------------------------------------------------------------------------
// Statements

enum class StmtKind {
  Let,      // let name [: T] = expr;
  LetElse,  // let Ctor(name) = expr else { ... };  (else block must return)
  Assign,   // place = expr;
  Assert,   // assert!(expr);
  If,       // if expr { ... } else { ... }
  Match,    // match expr { Ctor(x) => {..}, Ctor(y) => {..} }
  Drop,     // drop(place);
  Return,   // return [expr];
  ExprStmt, // expr; (calls in statement position)
};

struct Stmt;

struct MatchArm {
  std::string ctor;                  // variant name; "_" for wildcard
  std::optional<std::string> binder;
  std::vector<Stmt> block;
  Loc loc;
};

struct Stmt {
  StmtKind kind = StmtKind::ExprStmt;
  Loc loc;

  std::string let_name;                 // Let / LetElse binder
  std::optional<TypeExpr> let_type;
  std::string let_ctor;                 // LetElse constructor name
  ExprPtr expr;                         // init / condition / asserted / returned
  Place target;                         // Assign / Drop
  std::vector<Stmt> then_block;         // If then / LetElse else
  std::vector<Stmt> else_block;         // If else
  std::vector<MatchArm> arms;           // Match
};

// ---------------------------------------------------------------------------
// Declarations

enum class Purity { None, Value, Memory, Unstable };

// A capability kind as written in annotations. Mirrors capability.hpp's
// CapKind; kept as a string in the AST and validated during parsing.
struct CapabilityAnnotation {
  bool mut_receiver = false;  // &mut self vs &self
  ExprPtr cond;               // null means "true"
  std::string kind;           // readRef, writeRef, read, write, immutable,
                              // unique, local, noReadRef, noWriteRef
  ExprPtr target;             // expression evaluating to an address
  Loc loc;
};

struct Param {
  std::string name;
  TypeExpr type;
  Loc loc;
};

struct FunctionDecl {
  std::string name;        // method name or free-function name
  std::string file;        // source file, for diagnostics and obligations
  std::string self_type;   // enclosing impl type name, "" for free functions
  std::vector<std::string> generics;  // from the impl block and the fn
  std::vector<Param> params;
  TypeExpr ret = type_unit();
  std::vector<ExprPtr> requires_;
  std::vector<ExprPtr> ensures_;
  Purity purity = Purity::None;
  bool ghost = false;
  std::optional<std::vector<Stmt>> body;  // absent = trusted extern
  Loc loc;

  bool trusted() const { return !body.has_value(); }
  std::string qualified_name() const
  {
    return self_type.empty() ? name : self_type + "::" + name;
  }
};

struct FieldDecl {
  std::string name;
  TypeExpr type;
  Loc loc;
};

struct StructDecl {
  std::string name;
  std::string file;
  std::vector<std::string> generics;
  std::vector<FieldDecl> fields;
  std::vector<CapabilityAnnotation> annotations;
  bool thread_shared = false;
  Loc loc;
};

struct VariantDecl {
  std::string name;
  std::optional<TypeExpr> payload;
  Loc loc;
};

struct EnumDecl {
  std::string name;
  std::vector<std::string> generics;
  std::vector<VariantDecl> variants;  // at most two, at most one payload each
  Loc loc;
};

struct Program {
  std::string file;
  std::vector<StructDecl> structs;
  std::vector<EnumDecl> enums;
  std::vector<FunctionDecl> functions;  // free functions and methods
};

}  // namespace caplet

#endif

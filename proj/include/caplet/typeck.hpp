// Name resolution, whole-program monomorphization and type checking.
// Produces a TypedProgram in which every type is concrete, every call is
// resolved to a concrete function instance, and impure calls have been
// hoisted out of compound expressions into fresh temporaries.
#ifndef CAPLET_TYPECK_HPP
#define CAPLET_TYPECK_HPP

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "caplet/ast.hpp"

namespace caplet {

struct TypedAnnotation {
  bool mut_receiver = false;
  ExprPtr cond;    // typed, may be null (true); mentions only `self`
  std::string kind;
  ExprPtr target;  // typed address expression
  Loc loc;
};

struct StructInstance {
  std::string key;  // e.g. "Cell<i32>"
  const StructDecl* decl = nullptr;
  std::vector<TypeExpr> args;
  std::vector<FieldDecl> fields;  // substituted
  std::vector<TypedAnnotation> annotations;
  bool thread_shared = false;
};

struct EnumInstance {
  std::string key;
  const EnumDecl* decl = nullptr;
  std::vector<TypeExpr> args;
  std::vector<VariantDecl> variants;  // substituted
};

struct FunctionInstance {
  std::string key;       // "Cell<i32>::get", "use_cell"
  std::string file;
  const FunctionDecl* decl = nullptr;
  std::string self_key;  // instance key of the impl type, "" for free fns
  std::vector<Param> params;
  TypeExpr ret;
  std::vector<ExprPtr> requires_;
  std::vector<ExprPtr> ensures_;
  Purity purity = Purity::None;
  bool ghost = false;
  bool trusted = false;  // bodyless
  std::optional<std::vector<Stmt>> body;  // typechecked, hoisted
  Loc loc;
};

struct TypedProgram {
  std::map<std::string, StructInstance> structs;
  std::map<std::string, EnumInstance> enums;
  std::map<std::string, std::unique_ptr<FunctionInstance>> functions;
  // Bodied, non-pure, non-ghost, non-generic functions in source order:
  // the verification roots.
  std::vector<std::string> verify_order;
  // variant name -> (enum instance key) is not unique across instances;
  // variant name -> enum *declaration* name is.
  std::map<std::string, std::string> variant_enums;

  const FunctionInstance* find_function(const std::string& key) const
  {
    auto it = functions.find(key);
    return it == functions.end() ? nullptr : it->second.get();
  }
  const StructInstance* find_struct(const std::string& key) const
  {
    auto it = structs.find(key);
    return it == structs.end() ? nullptr : &it->second;
  }
  const EnumInstance* find_enum(const std::string& key) const
  {
    auto it = enums.find(key);
    return it == enums.end() ? nullptr : &it->second;
  }
};

bool is_copy_type(const TypeExpr& t);

// Checks and monomorphizes the merged programs (libraries + clients).
// Throws CapletError on the first fatal error.
TypedProgram typecheck(const std::vector<Program>& programs);

}  // namespace caplet

#endif

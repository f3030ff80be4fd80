// First-order encoding of an analyzed function: snapshot sorts, versioned
// memory functions, capability predicates, the axiom schemas, per-statement
// semantics with transition versions, and one proof obligation per assertion
// and precondition.
#ifndef CAPLET_ENCODER_HPP
#define CAPLET_ENCODER_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include "caplet/flow.hpp"
#include "caplet/typeck.hpp"

namespace caplet {

// Framing rule identifiers, used for tagging and for the mutation harness.
inline constexpr const char* kFrameImmutable = "immutable";
inline constexpr const char* kFrameUnique = "unique";
inline constexpr const char* kFrameAssignLocal = "assign_local";
inline constexpr const char* kFramePureCallLocal = "purecall_local";
inline constexpr const char* kFrameInterferenceLocal = "interference_local";

struct EncodeOptions {
  // Framing rules to suppress (mutation testing).
  std::set<std::string> disabled_frame_rules;
};

enum class ObligationKind { Assert, Precondition, PanicFreedom };

struct Obligation {
  ObligationKind kind = ObligationKind::Assert;
  std::string file;
  Loc loc;
  std::string description;
  std::string goal;   // SMT bool term
  std::string guard;  // edge guard symbol
};

struct EncodedFunction {
  std::string fn_key;
  std::string file;
  std::vector<std::string> prelude;  // complete common script lines
  std::vector<Obligation> obligations;

  // Self-contained script for one obligation: the prelude, the goals of
  // earlier obligations as guarded assumptions, this obligation's guard and
  // negated goal, and (check-sat).
  std::string script_for(size_t index) const;
};

// Deterministic snapshot sort name for a type ("Int", "Bool", "Addr" for
// primitives and raw pointers, |snap@T| otherwise).
std::string mem_sort_name(const TypeExpr& t);

EncodedFunction encode_function(const FunctionInstance& fn, const FlowResult& flow,
                                const TypedProgram& prog, const EncodeOptions& opts);

// A concrete snapshot value, used by mem_to_value and the coherence tests.
struct SnapVal {
  enum Kind { Int, Bool, Addr, Ctor } kind = Int;
  long long int_val = 0;
  bool bool_val = false;
  int addr = 0;  // index into a small address universe
  std::string ctor;  // struct key, "()"-tuple key, or "Enum::Variant"
  std::vector<SnapVal> args;

  bool operator==(const SnapVal&) const = default;
  std::string str() const;
};

// Does the type's snapshot mention reference layers (and therefore have a
// value snapshot distinct from its memory snapshot)?
bool contains_ref(const TypeExpr& t, const TypedProgram& prog);

// The total mem-snapshot -> value-snapshot conversion: drops reference
// addresses, keeps raw-pointer addresses, identity on primitives.
SnapVal mem_to_value(const TypeExpr& t, const SnapVal& mem, const TypedProgram& prog);

}  // namespace caplet

#endif

// Capability kinds and the algebra over them: the implication lattice,
// incompatibility pairs, structural derivation across projections, and
// instantiation of capability annotations for a receiver context.
#ifndef CAPLET_CAPABILITY_HPP
#define CAPLET_CAPABILITY_HPP

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "caplet/ast.hpp"

namespace caplet {

enum class CapKind : uint8_t {
  ReadRef,
  WriteRef,
  Read,
  Write,
  Immutable,
  Unique,
  Local,
  NoReadRef,
  NoWriteRef,
};

inline constexpr int kCapKindCount = 9;
inline constexpr std::array<CapKind, kCapKindCount> kAllCapKinds = {
  CapKind::ReadRef,  CapKind::WriteRef,  CapKind::Read,
  CapKind::Write,    CapKind::Immutable, CapKind::Unique,
  CapKind::Local,    CapKind::NoReadRef, CapKind::NoWriteRef,
};

const char* cap_kind_name(CapKind k);          // "readRef", "writeRef", ...
bool cap_kind_from_name(const std::string& s, CapKind& out);
bool is_deny_kind(CapKind k);                   // noReadRef / noWriteRef

using CapKindSet = std::set<CapKind>;

struct CapEdge {
  CapKind from;
  CapKind to;
  bool extended;  // not spelled out in the base implication list

  bool operator<(const CapEdge& o) const
  {
    return std::pair(from, to) < std::pair(o.from, o.to);
  }
};

struct EdgeTable {
  std::vector<CapEdge> implications;
  // Unordered incompatibility pairs, stored with first <= second.
  std::vector<std::pair<CapKind, CapKind>> incompatibilities;
};

// The fixed built-in table:
//   implications: writeRef->readRef, writeRef->unique, readRef->immutable,
//                 immutable->read, unique->write
//   incompatibilities: {immutable, write}, {unique, read}, {unique, write}
const EdgeTable& base_edges();

// Reflexive-transitive closure of `kinds` under base_edges implications.
CapKindSet implication_closure(const CapKindSet& kinds);

// True iff the closures of {k1} and {k2} contain a base incompatibility pair.
bool incompatible(CapKind k1, CapKind k2);

// DOT rendering of the lattice (implications solid, incompatibilities dashed).
std::string lattice_dot();

// ---------------------------------------------------------------------------
// Structural derivation

struct StructuralChild {
  Projection projection;
  CapKind kind;
};

// How a capability of kind `kind` held on a place of type `place_type`
// propagates to component places. Field projections inherit the kind (deny
// kinds excluded); Deref propagates writeRef through &mut and readRef through
// & / &mut, while deny kinds and local never cross a dereference. Raw
// pointers and UnsafeCell are opaque.
//
// `fields` lists the field names of `place_type` when it is a struct
// (callers resolve them; tuples use "0", "1", ...).
std::vector<StructuralChild> structural_children(CapKind kind,
                                                 const TypeExpr& place_type,
                                                 const std::vector<std::string>& fields);

}  // namespace caplet

#endif

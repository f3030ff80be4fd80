#include "caplet/capability.hpp"

#include <algorithm>
#include <sstream>

namespace caplet {

const char* cap_kind_name(CapKind k)
{
  switch (k) {
    case CapKind::ReadRef:    return "readRef";
    case CapKind::WriteRef:   return "writeRef";
    case CapKind::Read:       return "read";
    case CapKind::Write:      return "write";
    case CapKind::Immutable:  return "immutable";
    case CapKind::Unique:     return "unique";
    case CapKind::Local:      return "local";
    case CapKind::NoReadRef:  return "noReadRef";
    case CapKind::NoWriteRef: return "noWriteRef";
  }
  return "?";
}

bool cap_kind_from_name(const std::string& s, CapKind& out)
{
  for (CapKind k : kAllCapKinds) {
    if (s == cap_kind_name(k)) {
      out = k;
      return true;
    }
  }
  return false;
}

bool is_deny_kind(CapKind k)
{
  return k == CapKind::NoReadRef || k == CapKind::NoWriteRef;
}

const EdgeTable& base_edges()
{
  static const EdgeTable table = [] {
    EdgeTable t;
    t.implications = {
      {CapKind::WriteRef, CapKind::ReadRef, false},
      {CapKind::ReadRef, CapKind::Immutable, false},
      {CapKind::Immutable, CapKind::Read, false},
      {CapKind::WriteRef, CapKind::Unique, false},
      // write lacks the immutability and non-aliasing guarantees of a
      // mutable reference, so unique access still implies it.
      {CapKind::Unique, CapKind::Write, true},
    };
    std::sort(t.implications.begin(), t.implications.end());
    t.incompatibilities = {
      {CapKind::Write, CapKind::Immutable},
      {CapKind::Read, CapKind::Unique},
      {CapKind::Write, CapKind::Unique},  // a unique holder excludes other writers
    };
    for (auto& p : t.incompatibilities)
      if (p.second < p.first) std::swap(p.first, p.second);
    std::sort(t.incompatibilities.begin(), t.incompatibilities.end());
    return t;
  }();
  return table;
}

CapKindSet implication_closure(const CapKindSet& kinds)
{
  CapKindSet out = kinds;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const CapEdge& e : base_edges().implications) {
      if (out.count(e.from) && !out.count(e.to)) {
        out.insert(e.to);
        changed = true;
      }
    }
  }
  return out;
}

bool incompatible(CapKind k1, CapKind k2)
{
  CapKindSet c1 = implication_closure({k1});
  CapKindSet c2 = implication_closure({k2});
  for (const auto& [a, b] : base_edges().incompatibilities) {
    if ((c1.count(a) && c2.count(b)) || (c1.count(b) && c2.count(a))) return true;
  }
  return false;
}

std::string lattice_dot()
{
  std::ostringstream os;
  os << "digraph capabilities {\n";
  os << "  rankdir=BT;\n";
  for (CapKind k : kAllCapKinds)
    os << "  " << cap_kind_name(k) << ";\n";
  for (const CapEdge& e : base_edges().implications) {
    os << "  " << cap_kind_name(e.from) << " -> " << cap_kind_name(e.to);
    if (e.extended) os << " [label=\"extended\"]";
    os << ";\n";
  }
  for (const auto& [a, b] : base_edges().incompatibilities) {
    os << "  " << cap_kind_name(a) << " -> " << cap_kind_name(b)
       << " [dir=none, style=dashed];\n";
  }
  os << "}\n";
  return os.str();
}

std::vector<StructuralChild> structural_children(CapKind kind,
                                                 const TypeExpr& place_type,
                                                 const std::vector<std::string>& fields)
{
  std::vector<StructuralChild> out;
  switch (place_type.kind) {
    case TypeKind::SharedRef:
      if (kind == CapKind::ReadRef)
        out.push_back({{Projection::Deref, ""}, CapKind::ReadRef});
      break;
    case TypeKind::MutRef:
      if (kind == CapKind::WriteRef)
        out.push_back({{Projection::Deref, ""}, CapKind::WriteRef});
      else if (kind == CapKind::ReadRef)
        out.push_back({{Projection::Deref, ""}, CapKind::ReadRef});
      break;
    case TypeKind::Named:
    case TypeKind::Tuple: {
      // Deny kinds are about the place itself, not its parts.
      if (is_deny_kind(kind)) break;
      for (const std::string& f : fields)
        out.push_back({{Projection::Field, f}, kind});
      break;
    }
    case TypeKind::RawPtr:
    case TypeKind::UnsafeCell:
    case TypeKind::Int:
    case TypeKind::Bool:
    case TypeKind::Param:
      break;
  }
  return out;
}

}  // namespace caplet

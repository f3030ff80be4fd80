// Capability algebra: lattice closure, incompatibility, structural rules.
// Closure results are cross-checked against an independent brute-force
// reachability oracle over the 9-node implication graph.
#include <doctest.h>

#include <set>
#include <vector>

#include "caplet/capability.hpp"

using namespace caplet;

namespace {

// Independent oracle: exhaustive path enumeration over the base edges.
CapKindSet oracle_closure(const CapKindSet& start)
{
  CapKindSet out = start;
  // Repeated full-pair scan; intentionally dumber than the implementation.
  for (int pass = 0; pass < kCapKindCount + 1; ++pass) {
    for (CapKind from : kAllCapKinds) {
      if (!out.count(from)) continue;
      for (const CapEdge& e : base_edges().implications) {
        if (e.from == from) out.insert(e.to);
      }
    }
  }
  return out;
}

bool oracle_incompatible(CapKind a, CapKind b)
{
  CapKindSet ca = oracle_closure({a});
  CapKindSet cb = oracle_closure({b});
  for (CapKind x : ca) {
    for (CapKind y : cb) {
      for (auto [p, q] : base_edges().incompatibilities) {
        if ((x == p && y == q) || (x == q && y == p)) return true;
      }
    }
  }
  return false;
}

CapKindSet subset_from_mask(unsigned mask)
{
  CapKindSet s;
  for (int i = 0; i < kCapKindCount; ++i)
    if (mask & (1u << i)) s.insert(kAllCapKinds[static_cast<size_t>(i)]);
  return s;
}

}  // namespace

TEST_CASE("base edge table matches the fixed built-in relation")
{
  const EdgeTable& t = base_edges();
  auto has_edge = [&](CapKind a, CapKind b) {
    for (const CapEdge& e : t.implications)
      if (e.from == a && e.to == b) return true;
    return false;
  };
  CHECK(has_edge(CapKind::WriteRef, CapKind::ReadRef));
  CHECK(has_edge(CapKind::WriteRef, CapKind::Unique));
  CHECK(has_edge(CapKind::ReadRef, CapKind::Immutable));
  CHECK(has_edge(CapKind::Immutable, CapKind::Read));
  CHECK(has_edge(CapKind::Unique, CapKind::Write));
  CHECK(t.implications.size() == 5);

  auto has_pair = [&](CapKind a, CapKind b) {
    for (auto [p, q] : t.incompatibilities)
      if ((p == a && q == b) || (p == b && q == a)) return true;
    return false;
  };
  CHECK(has_pair(CapKind::Immutable, CapKind::Write));
  CHECK(has_pair(CapKind::Unique, CapKind::Read));
  CHECK(has_pair(CapKind::Unique, CapKind::Write));
  CHECK(t.incompatibilities.size() == 3);
}

TEST_CASE("closure examples")
{
  CHECK(implication_closure({}) == CapKindSet{});
  CHECK(implication_closure({CapKind::Immutable})
        == CapKindSet{CapKind::Immutable, CapKind::Read});
  CapKindSet wr = implication_closure({CapKind::WriteRef});
  CapKindSet expected{CapKind::WriteRef, CapKind::ReadRef, CapKind::Immutable,
                      CapKind::Read,     CapKind::Unique,  CapKind::Write};
  CHECK(wr == expected);
  CHECK(wr == oracle_closure({CapKind::WriteRef}));
}

TEST_CASE("closure is idempotent and monotone on all 512 subsets (oracle cross-check)")
{
  std::vector<CapKindSet> closures(512);
  for (unsigned mask = 0; mask < 512; ++mask) {
    CapKindSet s = subset_from_mask(mask);
    CapKindSet c = implication_closure(s);
    CHECK(c == oracle_closure(s));
    CHECK(implication_closure(c) == c);  // idempotence
    closures[mask] = c;
  }
  // Monotonicity: S1 subset of S2 implies closure(S1) subset of closure(S2).
  int violations = 0;
  for (unsigned m1 = 0; m1 < 512; ++m1) {
    for (unsigned m2 = 0; m2 < 512; ++m2) {
      if ((m1 & m2) != m1) continue;  // m1 must be a subset of m2
      const CapKindSet& c1 = closures[m1];
      const CapKindSet& c2 = closures[m2];
      if (!std::includes(c2.begin(), c2.end(), c1.begin(), c1.end())) ++violations;
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("no kind implies a deny kind")
{
  for (CapKind k : kAllCapKinds) {
    CapKindSet c = implication_closure({k});
    for (CapKind d : {CapKind::NoReadRef, CapKind::NoWriteRef}) {
      if (c.count(d)) CHECK(k == d);
    }
  }
}

TEST_CASE("incompatibility examples and brute force over all 81 pairs")
{
  CHECK(incompatible(CapKind::Immutable, CapKind::Write));
  CHECK_FALSE(incompatible(CapKind::Read, CapKind::Write));
  CHECK(incompatible(CapKind::WriteRef, CapKind::ReadRef));
  for (CapKind a : kAllCapKinds) {
    for (CapKind b : kAllCapKinds) {
      CHECK(incompatible(a, b) == oracle_incompatible(a, b));
      CHECK(incompatible(a, b) == incompatible(b, a));  // symmetry
    }
  }
  // Irreflexive on read/write/local/deny singletons.
  for (CapKind k : {CapKind::Read, CapKind::Write, CapKind::Local, CapKind::NoReadRef,
                    CapKind::NoWriteRef})
    CHECK_FALSE(incompatible(k, k));
}

TEST_CASE("structural children")
{
  TypeExpr mut_int = type_mut_ref(type_int());
  auto c1 = structural_children(CapKind::WriteRef, mut_int, {});
  REQUIRE(c1.size() == 1);
  CHECK(c1[0].projection.kind == Projection::Deref);
  CHECK(c1[0].kind == CapKind::WriteRef);

  TypeExpr cell;
  cell.kind = TypeKind::Named;
  cell.name = "Cell";
  cell.args.push_back(type_int());
  TypeExpr shared_cell = type_shared_ref(cell);
  auto c2 = structural_children(CapKind::ReadRef, shared_cell, {});
  REQUIRE(c2.size() == 1);
  CHECK(c2[0].projection.kind == Projection::Deref);
  CHECK(c2[0].kind == CapKind::ReadRef);

  auto c3 = structural_children(CapKind::ReadRef, type_raw_ptr(type_int(), true), {});
  CHECK(c3.empty());  // raw pointers are opaque

  // Fields inherit non-deny kinds; deny kinds and local stop appropriately.
  TypeExpr named;
  named.kind = TypeKind::Named;
  named.name = "Pair";
  auto c4 = structural_children(CapKind::Write, named, {"a", "b"});
  CHECK(c4.size() == 2);
  auto c5 = structural_children(CapKind::NoWriteRef, named, {"a", "b"});
  CHECK(c5.empty());
  auto c6 = structural_children(CapKind::Local, named, {"a", "b"});
  CHECK(c6.size() == 2);
  auto c7 = structural_children(CapKind::Local, mut_int, {});
  CHECK(c7.empty());  // local does not cross a dereference
}

TEST_CASE("lattice DOT dump lists every kind")
{
  std::string dot = lattice_dot();
  for (CapKind k : kAllCapKinds)
    CHECK(dot.find(cap_kind_name(k)) != std::string::npos);
  CHECK(dot.find("style=dashed") != std::string::npos);
}

// Snapshot sorts and the mem-to-value conversion, checked exhaustively on
// miniature universes: integers in [-2, 2], four addresses, both booleans.
#include <doctest.h>

#include "caplet/encoder.hpp"
#include "helpers.hpp"

using namespace caplet;

TEST_SUITE_BEGIN("snapshots");

namespace {

// Exhaustive enumeration of memory snapshots of a type over the miniature
// universes. Independent of the encoder; used as the test oracle's domain.
std::vector<SnapVal> enumerate_mem(const TypeExpr& t, const TypedProgram& prog)
{
  std::vector<SnapVal> out;
  switch (t.kind) {
    case TypeKind::Int: {
      for (long long v = -2; v <= 2; ++v) {
        SnapVal s;
        s.kind = SnapVal::Int;
        s.int_val = v;
        out.push_back(s);
      }
      return out;
    }
    case TypeKind::Bool: {
      for (bool b : {false, true}) {
        SnapVal s;
        s.kind = SnapVal::Bool;
        s.bool_val = b;
        out.push_back(s);
      }
      return out;
    }
    case TypeKind::RawPtr: {
      for (int a = 0; a < 4; ++a) {
        SnapVal s;
        s.kind = SnapVal::Addr;
        s.addr = a;
        out.push_back(s);
      }
      return out;
    }
    case TypeKind::UnsafeCell: {
      SnapVal s;
      s.kind = SnapVal::Ctor;
      s.ctor = type_key(t);
      out.push_back(s);
      return out;
    }
    case TypeKind::SharedRef:
    case TypeKind::MutRef: {
      std::vector<SnapVal> targets = enumerate_mem(t.args[0], prog);
      for (int a = 0; a < 4; ++a) {
        for (const SnapVal& tgt : targets) {
          SnapVal addr;
          addr.kind = SnapVal::Addr;
          addr.addr = a;
          SnapVal s;
          s.kind = SnapVal::Ctor;
          s.ctor = type_key(t);
          s.args = {addr, tgt};
          out.push_back(s);
        }
      }
      return out;
    }
    case TypeKind::Tuple: {
      out.push_back({});
      out.back().kind = SnapVal::Ctor;
      out.back().ctor = type_key(t);
      for (const TypeExpr& elem : t.args) {
        std::vector<SnapVal> exts;
        for (const SnapVal& prefix : out) {
          for (const SnapVal& v : enumerate_mem(elem, prog)) {
            SnapVal next = prefix;
            next.args.push_back(v);
            exts.push_back(next);
          }
        }
        out = std::move(exts);
      }
      return out;
    }
    case TypeKind::Named: {
      std::string key = type_key(t);
      if (const StructInstance* si = prog.find_struct(key)) {
        out.push_back({});
        out.back().kind = SnapVal::Ctor;
        out.back().ctor = key;
        for (const FieldDecl& f : si->fields) {
          std::vector<SnapVal> exts;
          for (const SnapVal& prefix : out) {
            for (const SnapVal& v : enumerate_mem(f.type, prog)) {
              SnapVal next = prefix;
              next.args.push_back(v);
              exts.push_back(next);
            }
          }
          out = std::move(exts);
        }
        return out;
      }
      const EnumInstance* ei = prog.find_enum(key);
      REQUIRE(ei);
      for (const VariantDecl& v : ei->variants) {
        SnapVal base;
        base.kind = SnapVal::Ctor;
        base.ctor = key + "::" + v.name;
        if (!v.payload) {
          out.push_back(base);
          continue;
        }
        for (const SnapVal& p : enumerate_mem(*v.payload, prog)) {
          SnapVal s = base;
          s.args = {p};
          out.push_back(s);
        }
      }
      return out;
    }
    case TypeKind::Param:
      FAIL("free parameter in snapshot enumeration");
  }
  return out;
}

// The oracle: value snapshots built directly from the type and memory
// snapshot, written as its own recursion over the same rules the sorts
// document (drop reference addresses, keep raw pointer addresses).
SnapVal direct_value(const TypeExpr& t, const SnapVal& mem, const TypedProgram& prog)
{
  if (t.kind == TypeKind::SharedRef || t.kind == TypeKind::MutRef)
    return direct_value(t.args[0], mem.args[1], prog);
  if (t.kind == TypeKind::Tuple) {
    SnapVal out = mem;
    for (size_t i = 0; i < t.args.size(); ++i)
      out.args[i] = direct_value(t.args[i], mem.args[i], prog);
    return out;
  }
  if (t.kind == TypeKind::Named) {
    if (const StructInstance* si = prog.find_struct(type_key(t))) {
      SnapVal out = mem;
      for (size_t i = 0; i < si->fields.size(); ++i)
        out.args[i] = direct_value(si->fields[i].type, mem.args[i], prog);
      return out;
    }
    const EnumInstance* ei = prog.find_enum(type_key(t));
    REQUIRE(ei);
    SnapVal out = mem;
    for (const VariantDecl& v : ei->variants) {
      if (out.ctor == type_key(t) + "::" + v.name && v.payload)
        out.args[0] = direct_value(*v.payload, mem.args[0], prog);
    }
    return out;
  }
  return mem;  // primitives, raw pointers, unsafe cells
}

TypeExpr named(const std::string& name, std::vector<TypeExpr> args = {})
{
  TypeExpr t;
  t.kind = TypeKind::Named;
  t.name = name;
  t.args = std::move(args);
  return t;
}

}  // namespace

TEST_CASE("snapshot sort names follow the type table")
{
  CHECK(mem_sort_name(type_int()) == "Int");
  CHECK(mem_sort_name(type_bool()) == "Bool");
  CHECK(mem_sort_name(type_raw_ptr(type_int(), true)) == "Addr");
  CHECK(mem_sort_name(type_shared_ref(type_int())) == "|snap@&i32|");
  CHECK(mem_sort_name(named("Cell", {type_int()})) == "|snap@Cell<i32>|");
}

TEST_CASE("a Cell's memory snapshot carries no information")
{
  LoadedProgram cell = test::load_client("clients/cell_client.cap");
  std::vector<SnapVal> cells = enumerate_mem(named("Cell", {type_int()}), cell.typed);
  CHECK(cells.size() == 1);  // product of units
  LoadedProgram refcell = test::load_client("clients/refcell_client.cap");
  std::vector<SnapVal> refcells =
    enumerate_mem(named("RefCell", {type_int()}), refcell.typed);
  CHECK(refcells.size() == 1);
}

TEST_CASE("mem_to_value examples: identity on primitives, drops ref addresses")
{
  LoadedProgram loaded = test::load_client("clients/cell_client.cap");
  SnapVal five;
  five.kind = SnapVal::Int;
  five.int_val = 5;
  CHECK(mem_to_value(type_int(), five, loaded.typed) == five);

  SnapVal addr;
  addr.kind = SnapVal::Addr;
  addr.addr = 2;
  CHECK(mem_to_value(type_raw_ptr(type_int(), false), addr, loaded.typed) == addr);

  SnapVal seven;
  seven.kind = SnapVal::Int;
  seven.int_val = 7;
  SnapVal ref;
  ref.kind = SnapVal::Ctor;
  ref.ctor = "&i32";
  ref.args = {addr, seven};
  CHECK(mem_to_value(type_shared_ref(type_int()), ref, loaded.typed) == seven);
}

TEST_CASE("mem_to_value agrees with direct value construction on all miniature snapshots")
{
  LoadedProgram loaded = caplet::load_program(
    {test::corpus("clients/refcell_client.cap"), test::corpus("clients/cell_client.cap")},
    {test::corpus("lib")});
  LoadedProgram arc = test::load_client("clients/arc_client.cap");

  struct Case {
    TypeExpr type;
    const TypedProgram* prog;
  };
  std::vector<Case> cases;
  auto add = [&](TypeExpr t, const TypedProgram& p) { cases.push_back({t, &p}); };

  add(type_int(), loaded.typed);
  add(type_bool(), loaded.typed);
  add(type_raw_ptr(type_int(), true), loaded.typed);
  add(type_shared_ref(type_int()), loaded.typed);
  add(type_mut_ref(type_int()), loaded.typed);
  add(type_shared_ref(type_shared_ref(type_int())), loaded.typed);   // depth 3
  TypeExpr pair;
  pair.kind = TypeKind::Tuple;
  pair.args = {type_int(), type_bool()};
  add(pair, loaded.typed);
  TypeExpr mixed;
  mixed.kind = TypeKind::Tuple;
  mixed.args = {type_shared_ref(type_int()), type_raw_ptr(type_bool(), false)};
  add(mixed, loaded.typed);
  add(named("Cell", {type_int()}), loaded.typed);
  add(named("RefCell", {type_int()}), loaded.typed);
  add(named("Ref", {type_int()}), loaded.typed);
  add(named("RefMut", {type_int()}), loaded.typed);
  add(type_shared_ref(named("Cell", {type_int()})), loaded.typed);
  add(named("Option", {type_int()}), arc.typed);
  TypeExpr ref_pair;
  ref_pair.kind = TypeKind::Tuple;
  ref_pair.args = {type_shared_ref(type_int()), type_int()};
  add(type_shared_ref(ref_pair), loaded.typed);  // depth 3 through a tuple
  add(named("Result", {named("Ref", {type_int()}), named("BorrowError")}), loaded.typed);
  add(named("Arc", {type_int()}), arc.typed);

  size_t total = 0;
  for (const Case& c : cases) {
    std::vector<SnapVal> mems = enumerate_mem(c.type, *c.prog);
    for (const SnapVal& m : mems) {
      SnapVal got = mem_to_value(c.type, m, *c.prog);
      SnapVal want = direct_value(c.type, m, *c.prog);
      if (!(got == want)) {
        CAPTURE(type_key(c.type));
        CAPTURE(m.str());
        CHECK(got.str() == want.str());
      }
      ++total;
    }
  }
  CHECK(total > 500);  // the suites really enumerated something
}

TEST_CASE("contains_ref distinguishes value-identical snapshot sorts")
{
  LoadedProgram loaded = test::load_client("clients/refcell_client.cap");
  CHECK_FALSE(contains_ref(type_int(), loaded.typed));
  CHECK_FALSE(contains_ref(type_raw_ptr(type_int(), true), loaded.typed));
  CHECK_FALSE(contains_ref(named("Ref", {type_int()}), loaded.typed));  // ptr field only
  CHECK(contains_ref(type_shared_ref(type_int()), loaded.typed));
  TypeExpr mixed;
  mixed.kind = TypeKind::Tuple;
  mixed.args = {type_int(), type_mut_ref(type_bool())};
  CHECK(contains_ref(mixed, loaded.typed));
}

TEST_SUITE_END();

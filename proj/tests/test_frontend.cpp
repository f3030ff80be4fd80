// Frontend: parsing, printing round trips, type checking, monomorphization
// and the named rejection cases.
#include <doctest.h>

#include <functional>

#include "caplet/printer.hpp"
#include "caplet/typeck.hpp"
#include "helpers.hpp"

using namespace caplet;

TEST_CASE("the cell client parses into one function with four statements and one assert")
{
  std::string text = test::read_file(test::corpus("clients/cell_client.cap"));
  Program prog = parse_program("cell_client.cap", text);
  REQUIRE(prog.functions.size() == 1);
  const FunctionDecl& fn = prog.functions[0];
  CHECK(fn.name == "cell_client");
  REQUIRE(fn.body.has_value());
  CHECK(fn.body->size() == 4);
  int asserts = 0;
  for (const Stmt& s : *fn.body)
    if (s.kind == StmtKind::Assert) ++asserts;
  CHECK(asserts == 1);
}

TEST_CASE("an empty file parses to an empty program")
{
  Program prog = parse_program("empty.cap", "");
  CHECK(prog.functions.empty());
  CHECK(prog.structs.empty());
  CHECK(prog.enums.empty());
}

TEST_CASE("conditional capability annotations parse into their parts")
{
  std::string text =
    "#[capable(&self if self.n() == 1 => local(self.p()))]\n"
    "struct S;\n"
    "impl S {\n"
    "    #[pure_unstable]\n"
    "    fn n(&self) -> i32;\n"
    "    #[pure_memory]\n"
    "    fn p(&self) -> *mut i32;\n"
    "}\n";
  Program prog = parse_program("cond.cap", text);
  REQUIRE(prog.structs.size() == 1);
  REQUIRE(prog.structs[0].annotations.size() == 1);
  const CapabilityAnnotation& ann = prog.structs[0].annotations[0];
  CHECK_FALSE(ann.mut_receiver);
  CHECK(ann.kind == "local");
  REQUIRE(ann.cond != nullptr);
  CHECK(print_expr(*ann.cond) == "self.n() == 1");
  CHECK(print_expr(*ann.target) == "self.p()");
}

TEST_CASE("parse-print-parse is a fixpoint on every corpus file")
{
  namespace fs = std::filesystem;
  int checked = 0;
  for (const char* sub : {"lib", "clients"}) {
    for (const auto& entry : fs::directory_iterator(test::corpus(sub))) {
      if (entry.path().extension() != ".cap") continue;
      std::string text = test::read_file(entry.path().string());
      Program once = parse_program("a.cap", text);
      std::string printed = print_program(once);
      Program twice = parse_program("b.cap", printed);
      CHECK(print_program(twice) == printed);
      ++checked;
    }
  }
  CHECK(checked >= 20);
}

TEST_CASE("typecheck resolves the examples' types")
{
  std::string text =
    "fn probe(c: &Cell<i32>, x: &RefCell<i32>) {\n"
    "    let before = c.get();\n"
    "    assert!(true);\n"
    "    let p = x.as_ptr();\n"
    "}\n";
  LoadedProgram loaded = test::load_snippet("typed.cap", text);
  const FunctionInstance* fn = loaded.typed.find_function("probe");
  REQUIRE(fn);
  const std::vector<Stmt>& body = *fn->body;
  CHECK(body[0].expr->type == type_int());                      // before: i32
  CHECK(body[1].expr->type == type_bool());                     // assert cond
  CHECK(body[2].expr->type == type_raw_ptr(type_int(), true));  // *mut i32
}

TEST_CASE("every reachable type is concrete after monomorphization")
{
  LoadedProgram loaded = test::load_client("clients/refcell_client.cap");
  std::function<void(const TypeExpr&)> check_type = [&](const TypeExpr& t) {
    CHECK(t.kind != TypeKind::Param);
    for (const TypeExpr& a : t.args) check_type(a);
  };
  std::function<void(const Expr&)> check_expr = [&](const Expr& e) {
    check_type(e.type);
    for (const ExprPtr& a : e.args) check_expr(*a);
  };
  for (const auto& [key, fi] : loaded.typed.functions) {
    for (const Param& p : fi->params) check_type(p.type);
    check_type(fi->ret);
    for (const ExprPtr& r : fi->requires_) check_expr(*r);
    for (const ExprPtr& e : fi->ensures_) check_expr(*e);
  }
  CHECK(loaded.typed.functions.count("RefCell<i32>::try_borrow"));
  CHECK(loaded.typed.structs.count("Ref<i32>"));
  CHECK(loaded.typed.enums.count("Result<Ref<i32>, BorrowError>"));
}

TEST_CASE("recursion between bodied functions is rejected, never crashes")
{
  std::string text =
    "fn ping(n: i32) -> i32 { return pong(n); }\n"
    "fn pong(n: i32) -> i32 { return ping(n); }\n";
  CHECK_THROWS_WITH_AS(test::load_snippet("rec.cap", text),
                       doctest::Contains("recursion"), CapletError);

  std::string self_rec = "fn loop_forever(n: i32) -> i32 { return loop_forever(n); }\n";
  CHECK_THROWS_WITH_AS(test::load_snippet("selfrec.cap", self_rec),
                       doctest::Contains("recursion"), CapletError);
}

TEST_CASE("structural equality on mismatched types is rejected")
{
  std::string text = "fn bad(a: i32, b: bool) { assert!(a ==== b); }\n";
  CHECK_THROWS_WITH_AS(test::load_snippet("eqmix.cap", text),
                       doctest::Contains("different types"), CapletError);
}

TEST_CASE("deref of a non-pointer is rejected")
{
  std::string text = "fn bad(a: i32) { assert!(deref(a) == 1); }\n";
  CHECK_THROWS_WITH_AS(test::load_snippet("badderef.cap", text),
                       doctest::Contains("raw pointer"), CapletError);
}

TEST_CASE("UnsafeCellOf outside library fields is rejected")
{
  std::string text = "fn bad(a: &UnsafeCellOf<i32>) { }\n";
  CHECK_THROWS_AS(test::load_snippet("badcell.cap", text), CapletError);
}

TEST_CASE("ghost functions cannot be called from executable code")
{
  std::string text = "fn bad(x: &RefCell<i32>) { let p = x.borrow_flag_ptr(); }\n";
  CHECK_THROWS_WITH_AS(test::load_snippet("ghostcall.cap", text),
                       doctest::Contains("ghost"), CapletError);
}

TEST_CASE("enums are limited to two variants")
{
  std::string text = "enum Three { A, B, C }\n";
  CHECK_THROWS_WITH_AS(test::load_snippet("three.cap", text),
                       doctest::Contains("two variants"), CapletError);
}

TEST_CASE("impure calls are hoisted out of compound expressions")
{
  std::string text =
    "fn probe(x: &RefCell<i32>) {\n"
    "    let after = *x.borrow();\n"
    "}\n";
  LoadedProgram loaded = test::load_snippet("hoist.cap", text);
  const FunctionInstance* fn = loaded.typed.find_function("probe");
  REQUIRE(fn);
  REQUIRE(fn->body->size() >= 2);
  const Stmt& first = (*fn->body)[0];
  CHECK(first.kind == StmtKind::Let);
  CHECK(first.let_name.substr(0, 3) == "__t");
  CHECK(first.expr->kind == ExprKind::Call);
  CHECK(first.expr->resolved == "RefCell<i32>::borrow");
}

TEST_CASE("capability annotations may only mention the receiver")
{
  std::string text =
    "#[capable(&self => local(other.p()))]\n"
    "struct S { value: UnsafeCellOf<i32> }\n"
    "impl S { #[pure_memory] fn p(&self) -> *mut i32; }\n"
    "fn touch(s: &S) { }\n";
  CHECK_THROWS_WITH_AS(test::load_snippet("annself.cap", text),
                       doctest::Contains("self"), CapletError);
}

TEST_CASE("syntax errors carry line and column")
{
  try {
    parse_program("bad.cap", "fn broken( {\n}\n");
    FAIL("expected a parse error");
  } catch (const CapletError& e) {
    CHECK(e.diag.loc.line == 1);
    CHECK(std::string(e.what()).find("bad.cap:1:") != std::string::npos);
  }
}

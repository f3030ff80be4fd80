// Purity rules on bodied functions and specification expressions.
#include <doctest.h>

#include "helpers.hpp"

using namespace caplet;

namespace {

// Library scaffolding for purity probes: a raw-pointer source and targets.
const char* kPrelude =
  "struct Holder { value: UnsafeCellOf<i32> }\n"
  "impl Holder {\n"
  "    #[pure_memory] fn ptr(&self) -> *mut i32;\n"
  "}\n";

std::vector<Violation> violations_for(const std::string& name, const std::string& text)
{
  LoadedProgram loaded = test::load_snippet(name, std::string(kPrelude) + text);
  return check_program_purity(loaded.typed);
}

bool has_rule(const std::vector<Violation>& vs, char rule)
{
  for (const Violation& v : vs)
    if (v.rule == rule) return true;
  return false;
}

}  // namespace

TEST_CASE("pure-value bodies may not read through raw pointers (rule d/f)")
{
  auto vs = violations_for("pv_deref.cap",
                           "#[pure]\n"
                           "fn peek(p: *mut i32) -> i32 { return deref(p); }\n");
  CHECK(!vs.empty());
  CHECK(has_rule(vs, 'd'));
}

TEST_CASE("pure functions need copy-type parameters (rule a)")
{
  auto vs = violations_for("pv_mutref.cap",
                           "#[pure]\n"
                           "fn touch(r: &mut i32) -> i32 { return 1; }\n");
  CHECK(has_rule(vs, 'a'));
}

TEST_CASE("a constant function is pure at every level")
{
  for (const char* attr : {"#[pure]", "#[pure_memory]", "#[pure_unstable]"}) {
    auto vs = violations_for("pv_const.cap",
                             std::string(attr) + "\nfn five() -> i32 { return 5; }\n");
    CHECK(vs.empty());
  }
}

TEST_CASE("calls above the declared level are violations (rule c/d)")
{
  auto vs = violations_for("pv_call.cap",
                           "#[pure]\n"
                           "fn view(h: &Holder) -> *mut i32 { return h.ptr(); }\n");
  CHECK(!vs.empty());  // pure-value calling pure-memory
  auto ok = violations_for("pm_call.cap",
                           "#[pure_memory]\n"
                           "fn view(h: &Holder) -> *mut i32 { return h.ptr(); }\n");
  CHECK(ok.empty());
}

TEST_CASE("non-pure calls and asserts are banned from pure bodies (rule g)")
{
  auto vs = violations_for("pv_impure.cap",
                           "fn effect(h: &Holder);\n"
                           "#[pure]\n"
                           "fn bad(h: &Holder) -> i32 { effect(h); return 1; }\n");
  CHECK(has_rule(vs, 'g'));
  auto va = violations_for("pv_assert.cap",
                           "#[pure]\n"
                           "fn bad2() -> i32 { assert!(true); return 1; }\n");
  CHECK(has_rule(va, 'g'));
}

TEST_CASE("pure-value bodies may not observe reference addresses (rule d)")
{
  auto vs = violations_for("pv_addr.cap",
                           "#[pure]\n"
                           "fn addr(r: &i32) -> *const i32 { return r as *const i32; }\n");
  CHECK(has_rule(vs, 'd'));
  auto ok = violations_for("pm_addr.cap",
                           "#[pure_memory]\n"
                           "fn addr(r: &i32) -> *const i32 { return r as *const i32; }\n");
  CHECK(ok.empty());
}

TEST_CASE("level monotonicity: accepted at a level means accepted above it")
{
  LoadedProgram loaded = test::load_client("clients/refcell_client.cap");
  const Purity levels[] = {Purity::Value, Purity::Memory, Purity::Unstable};
  for (const auto& [key, fi] : loaded.typed.functions) {
    if (fi->purity == Purity::None || !fi->body) continue;
    for (int i = 0; i < 3; ++i) {
      if (levels[i] != fi->purity) continue;
      bool accepted_below = check_purity_at(*fi, levels[i], loaded.typed).empty();
      for (int j = i; j < 3; ++j) {
        bool accepted = check_purity_at(*fi, levels[j], loaded.typed).empty();
        if (accepted_below) CHECK(accepted);
      }
    }
  }
}

TEST_CASE("violations come out sorted by source span")
{
  auto vs = violations_for("pv_two.cap",
                           "#[pure]\n"
                           "fn bad(p: *mut i32, q: *mut i32) -> i32 {\n"
                           "    let a = deref(p);\n"
                           "    let b = deref(q);\n"
                           "    return a + b;\n"
                           "}\n");
  REQUIRE(vs.size() >= 2);
  for (size_t i = 1; i < vs.size(); ++i) CHECK(!(vs[i].loc < vs[i - 1].loc));
}

TEST_CASE("specification calls must target pure functions")
{
  // Spec expressions admit all three purity levels.
  LoadedProgram cell = test::load_client("clients/cell_client.cap");
  const FunctionInstance* get = cell.typed.find_function("Cell<i32>::get");
  REQUIRE(get);
  REQUIRE(!get->ensures_.empty());
  CHECK(check_spec_purity(*get->ensures_[0], get->file, cell.typed).empty());

  // A non-pure extern in an ensures is one violation.
  std::string text =
    "fn effect(h: &Holder) -> i32;\n"
    "#[ensures(result == effect(h))]\n"
    "fn bad(h: &Holder) -> i32;\n"
    "fn touch(h: &Holder) { let x = bad(h); }\n";
  LoadedProgram loaded = test::load_snippet("spec_impure.cap",
                                            std::string(kPrelude) + text);
  std::vector<Violation> vs = check_program_purity(loaded.typed);
  REQUIRE(vs.size() == 1);
  CHECK(vs[0].rule == 's');
}

TEST_CASE("the arc strong-count condition is a valid specification expression")
{
  LoadedProgram arc = test::load_client("clients/arc_client.cap");
  const StructInstance* arc_struct = arc.typed.find_struct("Arc<i32>");
  REQUIRE(arc_struct);
  bool found_conditional = false;
  for (const TypedAnnotation& ann : arc_struct->annotations) {
    if (!ann.cond) continue;
    found_conditional = true;
    CHECK(check_spec_purity(*ann.cond, "arc.cap", arc.typed).empty());
  }
  CHECK(found_conditional);
}

TEST_CASE("the whole corpus passes the purity checker")
{
  for (const char* client :
       {"clients/cell_client.cap", "clients/refcell_client.cap",
        "clients/arc_client.cap", "clients/rc_client.cap", "clients/mutex_client.cap",
        "clients/atomic_client.cap", "clients/box_client.cap"}) {
    LoadedProgram loaded = test::load_client(client);
    CHECK(check_program_purity(loaded.typed).empty());
  }
}

// Encoder: axiom shapes, obligation extraction, determinism against the
// golden scripts, version freshness, and solver-checked encoding properties.
#include <doctest.h>

#include <regex>

#include "caplet/encoder.hpp"
#include "caplet/solver.hpp"
#include "helpers.hpp"

using namespace caplet;

namespace {

EncodedFunction encode_client(const std::string& client, const std::string& fn_key,
                              const EncodeOptions& opts = {})
{
  LoadedProgram loaded = test::load_client(client);
  const FunctionInstance* fn = loaded.typed.find_function(fn_key);
  REQUIRE(fn);
  FlowResult flow = analyze_function(*fn, loaded.typed);
  return encode_function(*fn, flow, loaded.typed, opts);
}

std::string prelude_text(const EncodedFunction& enc)
{
  std::string out;
  for (const std::string& line : enc.prelude) out += line + "\n";
  return out;
}

}  // namespace

TEST_CASE("per-type implication axioms appear for every lattice edge")
{
  EncodedFunction enc = encode_client("clients/cell_client.cap", "cell_client");
  std::string text = prelude_text(enc);
  CHECK(text.find("(=> (|cap.writeRef@i32| r a w) (|cap.unique@i32| r a w))")
        != std::string::npos);
  CHECK(text.find("(=> (|cap.writeRef@i32| r a w) (|cap.readRef@i32| r a w))")
        != std::string::npos);
  CHECK(text.find("(=> (|cap.readRef@i32| r a w) (|cap.immutable@i32| r a w))")
        != std::string::npos);
  CHECK(text.find("(=> (|cap.immutable@i32| r a w) (|cap.read@i32| r a w))")
        != std::string::npos);
  CHECK(text.find("(=> (|cap.unique@i32| r a w) (|cap.write@i32| r a w))")
        != std::string::npos);
}

TEST_CASE("the cell annotations become guarded target axioms")
{
  EncodedFunction enc = encode_client("clients/cell_client.cap", "cell_client");
  std::string text = prelude_text(enc);
  // readRef on the cell grants local at the content address.
  CHECK(text.find("; annotation Cell<i32> #0 local") != std::string::npos);
  std::regex ann("cap\\.readRef@Cell<i32>\\| r a w\\)\\s*\\(\\|cap\\.local@i32\\|");
  CHECK(std::regex_search(text, ann));
}

TEST_CASE("incompatible capabilities force equal roots (not distinct ones)")
{
  EncodedFunction enc = encode_client("clients/cell_client.cap", "cell_client");
  std::string text = prelude_text(enc);
  CHECK(text.find("(=> (and (|cap.read@i32| r1 a w) (|cap.unique@i32| r2 a w)) (= r1 "
                  "r2))")
        != std::string::npos);
  CHECK(text.find("(= r1 r2)") != std::string::npos);
  CHECK(text.find("(not (= r1 r2))") == std::string::npos);
}

TEST_CASE("obligation counts per client match the case studies")
{
  EncodedFunction cell = encode_client("clients/cell_client.cap", "cell_client");
  REQUIRE(cell.obligations.size() == 1);
  CHECK(cell.obligations[0].kind == ObligationKind::Assert);

  EncodedFunction refcell =
    encode_client("clients/refcell_client.cap", "refcell_client");
  int asserts = 0, preconditions = 0;
  for (const Obligation& ob : refcell.obligations) {
    if (ob.kind == ObligationKind::Assert) ++asserts;
    if (ob.kind == ObligationKind::PanicFreedom) ++preconditions;
  }
  CHECK(asserts == 2);
  CHECK(preconditions == 1);  // RefCell::borrow

  std::string text = "fn silent(a: i32) { let b = a + 1; }\n";
  LoadedProgram quiet = test::load_snippet("quiet.cap", text);
  const FunctionInstance* fn = quiet.typed.find_function("silent");
  FlowResult flow = analyze_function(*fn, quiet.typed);
  EncodedFunction enc = encode_function(*fn, flow, quiet.typed, {});
  CHECK(enc.obligations.empty());
}

TEST_CASE("obligations come out ordered by source span")
{
  EncodedFunction arc = encode_client("clients/arc_client.cap", "arc_client");
  REQUIRE(arc.obligations.size() == 6);
  for (size_t i = 1; i < arc.obligations.size(); ++i)
    CHECK(!(arc.obligations[i].loc < arc.obligations[i - 1].loc));
}

TEST_CASE("version identifiers are declared exactly once")
{
  EncodedFunction enc = encode_client("clients/refcell_client.cap", "refcell_client");
  std::set<std::string> declared;
  std::regex decl("\\(declare-const (v[0-9]+|t[0-9]+) Ver\\)");
  for (const std::string& line : enc.prelude) {
    std::smatch m;
    if (std::regex_search(line, m, decl)) CHECK(declared.insert(m[1]).second);
  }
  CHECK(declared.size() > 10);
}

TEST_CASE("framing axioms are always capability-guarded")
{
  for (const char* client : {"clients/cell_client.cap", "clients/refcell_client.cap"}) {
    std::string key = client == std::string("clients/cell_client.cap")
                        ? "cell_client"
                        : "refcell_client";
    EncodedFunction enc = encode_client(client, key);
    for (size_t i = 0; i + 1 < enc.prelude.size(); ++i) {
      if (enc.prelude[i].rfind("; frame ", 0) == 0) {
        const std::string& axiom = enc.prelude[i + 1];
        CHECK(axiom.find("|cap.") != std::string::npos);
      }
    }
  }
}

TEST_CASE("unique framing is emitted only where a bare unique annotation exists")
{
  EncodedFunction cell = encode_client("clients/cell_client.cap", "cell_client");
  EncodedFunction refcell =
    encode_client("clients/refcell_client.cap", "refcell_client");
  EncodedFunction arc = encode_client("clients/arc_client.cap", "arc_client");
  CHECK(prelude_text(cell).find("; frame unique") == std::string::npos);
  CHECK(prelude_text(refcell).find("; frame unique") == std::string::npos);
  CHECK(prelude_text(arc).find("; frame unique") != std::string::npos);
}

TEST_CASE("encoding twice is byte-identical and matches the golden scripts")
{
  for (const char* spec : {"clients/cell_client.cap cell_client golden/cell_client",
                           "clients/refcell_client.cap refcell_client golden/refcell_client"}) {
    std::istringstream ss(spec);
    std::string client, key, golden;
    ss >> client >> key >> golden;
    EncodedFunction a = encode_client(client, key);
    EncodedFunction b = encode_client(client, key);
    REQUIRE(a.obligations.size() == b.obligations.size());
    for (size_t i = 0; i < a.obligations.size(); ++i) {
      std::string script = a.script_for(i);
      CHECK(script == b.script_for(i));
      std::string want =
        test::read_file(test::corpus(golden + "/" + std::to_string(i) + ".smt2"));
      CHECK(script == want);
    }
  }
}

TEST_CASE("pure-unstable calls with equal arguments agree within one version")
{
  // Two c.get() occurrences in one assertion encode to the same term, so the
  // claim is provable even though nothing frames the content.
  std::string text =
    "fn stable(c: &Cell<i32>) {\n"
    "    assert!(c.get() == c.get()); //~ VERIFY\n"
    "}\n";
  std::string path = test::write_temp("stable.cap", text);
  std::string out;
  int code = test::run_command(test::caplet_bin() + " verify " + path + " --lib "
                                 + test::corpus("lib") + " --solver " + test::capsmt_bin()
                                 + " --expect --out /tmp/caplet-test-out",
                               &out);
  CHECK(code == 0);
  CHECK(out.find("all expectations met") != std::string::npos);
}

TEST_CASE("encoding rejects a spec mentioning a place with no live root")
{
  // `y` is dropped before the assert; flow keeps no root for it and the
  // encoder has no address for the place.
  std::string text =
    "fn bad(x: &Rc<i32>) {\n"
    "    let y = Rc::clone(x);\n"
    "    drop(y);\n"
    "    assert!(Rc::strong_count(y) == 1);\n"
    "}\n";
  CHECK_THROWS_AS(test::load_snippet("deadplace.cap", text), CapletError);
}

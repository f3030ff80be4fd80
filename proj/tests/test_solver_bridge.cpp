// Solver bridge: subprocess control, result parsing, timeouts, and
// dispatch-order independence.
#include <doctest.h>

#include <sys/stat.h>

#include "caplet/encoder.hpp"
#include "caplet/solver.hpp"
#include "helpers.hpp"

using namespace caplet;

namespace {

std::string script_file(const std::string& name, const std::string& text)
{
  return test::write_temp(name, text);
}

// A propositional pigeonhole instance: n+1 pigeons, n holes; hard for any
// DPLL-style search, used to exercise timeouts.
std::string pigeonhole(int holes)
{
  std::ostringstream os;
  int pigeons = holes + 1;
  for (int p = 0; p < pigeons; ++p)
    for (int h = 0; h < holes; ++h)
      os << "(declare-const x" << p << "_" << h << " Bool)\n";
  for (int p = 0; p < pigeons; ++p) {
    os << "(assert (or";
    for (int h = 0; h < holes; ++h) os << " x" << p << "_" << h;
    os << "))\n";
  }
  for (int h = 0; h < holes; ++h)
    for (int p1 = 0; p1 < pigeons; ++p1)
      for (int p2 = p1 + 1; p2 < pigeons; ++p2)
        os << "(assert (or (not x" << p1 << "_" << h << ") (not x" << p2 << "_" << h
           << ")))\n";
  os << "(check-sat)\n";
  return os.str();
}

}  // namespace

TEST_CASE("run_script parses the final status token")
{
  SolverConfig config = test::solver_config();
  SolverResult unsat =
    run_script(script_file("contradiction.smt2", "(assert false)(check-sat)"), config);
  CHECK(unsat.status == SolverStatus::Unsat);

  SolverResult sat =
    run_script(script_file("tautology.smt2", "(assert true)(check-sat)"), config);
  CHECK(sat.status == SolverStatus::Sat);
}

TEST_CASE("a missing executable is a process error")
{
  SolverConfig config;
  config.solver_path = "/nonexistent/solver";
  SolverResult r = run_script(script_file("any.smt2", "(check-sat)"), config);
  CHECK(r.status == SolverStatus::ProcessError);
  CHECK(!r.detail.empty());
}

TEST_CASE("unparsable solver output is a process error with the output attached")
{
  std::string fake = test::write_temp("fake_solver.sh", "#!/bin/sh\necho banana\n");
  chmod(fake.c_str(), 0755);
  SolverConfig config;
  config.solver_path = fake;
  SolverResult r = run_script(script_file("any2.smt2", "(check-sat)"), config);
  CHECK(r.status == SolverStatus::ProcessError);
  CHECK(r.detail.find("banana") != std::string::npos);
}

TEST_CASE("a hard instance with a 1 ms budget times out and the child is killed")
{
  SolverConfig config = test::solver_config(/*timeout_ms=*/1);
  SolverResult r = run_script(script_file("pigeon.smt2", pigeonhole(9)), config);
  CHECK(r.status == SolverStatus::Timeout);
  CHECK(r.elapsed_ms < 2000);  // the kill happened promptly, wall clock confirms
}

TEST_CASE("verify_function reports outcomes in source order at any parallelism")
{
  LoadedProgram loaded = test::load_client("clients/arc_client.cap");
  const FunctionInstance* fn = loaded.typed.find_function("arc_client");
  REQUIRE(fn);
  FlowResult flow = analyze_function(*fn, loaded.typed);
  EncodedFunction enc = encode_function(*fn, flow, loaded.typed, {});

  std::vector<VerificationOutcome> serial =
    verify_function(enc, "/tmp/caplet-test-serial", test::solver_config(120000, 1));
  std::vector<VerificationOutcome> parallel =
    verify_function(enc, "/tmp/caplet-test-par", test::solver_config(120000, 4));
  REQUIRE(serial.size() == parallel.size());
  for (size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].loc == parallel[i].loc);
    CHECK(serial[i].verdict == parallel[i].verdict);
  }
  for (size_t i = 1; i < serial.size(); ++i)
    CHECK(!(serial[i].loc < serial[i - 1].loc));
}

TEST_CASE("a refuted obligation does not suppress the ones after it")
{
  LoadedProgram loaded = test::load_client("clients/cell_two_calls.cap");
  const FunctionInstance* fn = loaded.typed.find_function("cell_two_calls");
  REQUIRE(fn);
  FlowResult flow = analyze_function(*fn, loaded.typed);
  EncodedFunction enc = encode_function(*fn, flow, loaded.typed, {});
  std::vector<VerificationOutcome> outcomes =
    verify_function(enc, "/tmp/caplet-test-seq", test::solver_config());
  REQUIRE(outcomes.size() == 2);
  CHECK(outcomes[0].verdict == Verdict::NotVerified);
  CHECK(outcomes[1].verdict == Verdict::Verified);
}

TEST_CASE("the default solver resolves CAPLET_SOLVER first")
{
  setenv("CAPLET_SOLVER", "/tmp/some-solver", 1);
  CHECK(default_solver("caplet") == "/tmp/some-solver");
  unsetenv("CAPLET_SOLVER");
}

// External SMT solver bridge: runs scripts through a solver subprocess with
// a wall-clock timeout and maps results to verification verdicts.
#ifndef CAPLET_SOLVER_HPP
#define CAPLET_SOLVER_HPP

#include <optional>
#include <string>
#include <vector>

#include "caplet/encoder.hpp"

namespace caplet {

struct SolverConfig {
  std::string solver_path;             // executable
  std::vector<std::string> solver_args;
  int timeout_ms = 30000;
  int jobs = 1;
};

// Locates the default solver: $CAPLET_SOLVER, a capsmt binary next to the
// running executable, then z3 on PATH. Returns empty when none is found.
std::string default_solver(const std::string& argv0);

enum class SolverStatus { Unsat, Sat, Unknown, Timeout, ProcessError };

struct SolverResult {
  SolverStatus status = SolverStatus::ProcessError;
  int elapsed_ms = 0;
  std::string detail;  // raw output for errors and sat models
};

SolverResult run_script(const std::string& script_path, const SolverConfig& config);

enum class Verdict { Verified, NotVerified, Inconclusive };

struct VerificationOutcome {
  std::string file;
  Loc loc;
  ObligationKind kind = ObligationKind::Assert;
  std::string description;
  Verdict verdict = Verdict::Inconclusive;
  SolverResult solver;
};

// Writes each obligation's script under `script_dir` (out/<fn>/<idx>.smt2
// layout) and dispatches them to the solver with bounded parallelism.
// Outcomes come back in source order regardless of dispatch order.
std::vector<VerificationOutcome> verify_function(const EncodedFunction& encoded,
                                                 const std::string& script_dir,
                                                 const SolverConfig& config);

}  // namespace caplet

#endif

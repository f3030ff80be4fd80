// Pipeline orchestration: load and parse inputs (with library auto-loading),
// type check, purity check, analyze, encode, solve, and report.
#ifndef CAPLET_DRIVER_HPP
#define CAPLET_DRIVER_HPP

#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "caplet/encoder.hpp"
#include "caplet/solver.hpp"

namespace caplet {

struct DriverOptions {
  std::vector<std::string> files;
  std::vector<std::string> lib_dirs;  // --lib; defaults to ./lib or ../lib of inputs
  std::string solver_path;
  std::vector<std::string> solver_args;
  int timeout_ms = 30000;
  int jobs = 1;
  bool expect = false;
  bool json = false;
  std::string emit_smt_dir;  // write scripts, skip solving
  std::string out_dir = "out";
  bool dump_roots = false;
  std::set<std::string> disabled_frame_rules;  // mutation testing support
  std::string argv0 = "caplet";
};

// Exit codes: 0 verified / expectations met, 1 refuted or unmet expectation,
// 2 inconclusive results present, 3 usage/config/frontend error.
int run_driver(const DriverOptions& opts, std::ostream& out, std::ostream& err);

// Loads and checks the given files (plus libraries), returning the analyzed
// program. Used by tests that drive the pipeline below the CLI.
struct LoadedProgram {
  TypedProgram typed;
  // expectations per file, as (line, expectation) pairs
  std::map<std::string, std::map<int, std::string>> expectations;
  std::vector<std::string> input_files;
};
LoadedProgram load_program(const std::vector<std::string>& files,
                           const std::vector<std::string>& lib_dirs);

// The corpus manifest: client files with their expected --expect exit codes.
// Every client file appears exactly once; an empty manifest is an error so
// CI cannot silently run nothing.
struct ManifestEntry {
  std::string file;
  int expected_exit = 0;
};
std::vector<ManifestEntry> load_manifest(const std::string& path);

}  // namespace caplet

#endif

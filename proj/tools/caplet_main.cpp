// caplet command line: verify .cap programs against their library
// annotations, or dump analysis tables.
#include <iostream>

#include <CLI11.hpp>

#include "caplet/capability.hpp"
#include "caplet/driver.hpp"

int main(int argc, char** argv)
{
  CLI::App app{"caplet - capability-based deductive verifier"};
  app.require_subcommand(0, 1);

  bool dump_lattice = false;
  app.add_flag("--dump-lattice", dump_lattice,
               "print the capability implication lattice as DOT and exit");

  caplet::DriverOptions opts;
  opts.argv0 = argv[0];

  CLI::App* verify = app.add_subcommand("verify", "verify client programs");
  verify->add_option("files", opts.files, "input .cap files")->required();
  verify->add_option("--lib", opts.lib_dirs,
                     "library directory (default: lib/ next to the inputs)");
  verify->add_option("--solver", opts.solver_path,
                     "SMT solver executable (default: $CAPLET_SOLVER, then a "
                     "capsmt next to this binary, then z3 on PATH)");
  verify->add_option("--solver-arg", opts.solver_args, "extra solver argument")
    ->take_all();
  verify->add_option("--timeout", opts.timeout_ms, "per-obligation timeout in ms")
    ->default_val(30000);
  verify->add_option("--jobs", opts.jobs, "parallel solver processes")->default_val(1);
  verify->add_flag("--expect", opts.expect,
                   "check //~ VERIFY / //~ FAIL / //~ INCOMPLETE comments");
  verify->add_flag("--json", opts.json, "machine-readable report");
  verify->add_option("--emit-smt", opts.emit_smt_dir,
                     "write SMT scripts to this directory and skip solving");
  verify->add_option("--out", opts.out_dir, "script output directory")
    ->default_val("out");
  verify->add_flag("--dump-roots", opts.dump_roots, "print the root place table as TSV");
  std::vector<std::string> disabled;
  verify
    ->add_option("--disable-frame-rule", disabled,
                 "suppress a framing rule (mutation testing): immutable, unique, "
                 "assign_local, purecall_local, interference_local")
    ->take_all();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  if (dump_lattice) {
    std::cout << caplet::lattice_dot();
    return 0;
  }
  if (!verify->parsed()) {
    std::cerr << app.help();
    return 3;
  }
  opts.disabled_frame_rules.insert(disabled.begin(), disabled.end());
  return caplet::run_driver(opts, std::cout, std::cerr);
}

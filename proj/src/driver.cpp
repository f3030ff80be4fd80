#include "caplet/driver.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "caplet/flow.hpp"
#include "caplet/parser.hpp"
#include "caplet/purity.hpp"

namespace caplet {

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw CapletError(path, {}, "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sanitize(const std::string& name)
{
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') {
      out += c;
    } else {
      out += '_';
    }
  }
  return out;
}

const char* verdict_str(Verdict v)
{
  switch (v) {
    case Verdict::Verified: return "verified";
    case Verdict::NotVerified: return "not verified";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

const char* kind_str(ObligationKind k)
{
  switch (k) {
    case ObligationKind::Assert: return "assert";
    case ObligationKind::Precondition: return "precondition";
    case ObligationKind::PanicFreedom: return "panic_freedom";
  }
  return "?";
}

}  // namespace

LoadedProgram load_program(const std::vector<std::string>& files,
                           const std::vector<std::string>& lib_dirs)
{
  LoadedProgram out;
  out.input_files = files;

  // Library directories: explicit ones, otherwise lib/ next to each input
  // (or next to its parent directory).
  std::vector<std::string> dirs = lib_dirs;
  if (dirs.empty()) {
    std::set<std::string> seen;
    for (const std::string& f : files) {
      fs::path p = fs::path(f).parent_path();
      for (fs::path cand : {p / "lib", p.parent_path() / "lib"}) {
        std::error_code ec;
        if (fs::is_directory(cand, ec) && seen.insert(cand.string()).second)
          dirs.push_back(cand.string());
      }
    }
  }

  std::vector<std::string> lib_files;
  for (const std::string& d : dirs) {
    std::vector<std::string> entries;
    for (const auto& e : fs::directory_iterator(d)) {
      if (e.path().extension() == ".cap") entries.push_back(e.path().string());
    }
    std::sort(entries.begin(), entries.end());
    lib_files.insert(lib_files.end(), entries.begin(), entries.end());
  }

  std::vector<Program> programs;
  std::set<std::string> loaded;
  for (const std::string& f : lib_files) {
    if (!loaded.insert(fs::weakly_canonical(f).string()).second) continue;
    ParsedFile parsed = parse_file(f, read_file(f));
    programs.push_back(std::move(parsed.program));
  }
  for (const std::string& f : files) {
    if (!loaded.insert(fs::weakly_canonical(f).string()).second) continue;
    ParsedFile parsed = parse_file(f, read_file(f));
    for (const Expectation& e : parsed.expectations)
      out.expectations[f][e.line] = e.what;
    programs.push_back(std::move(parsed.program));
  }

  out.typed = typecheck(programs);
  return out;
}

int run_driver(const DriverOptions& opts, std::ostream& out, std::ostream& err)
{
  if (opts.files.empty()) {
    err << "error: no input files\n";
    return 3;
  }
  for (const std::string& f : opts.files) {
    std::error_code ec;
    if (!fs::exists(f, ec)) {
      err << f << ": error: no such file\n";
      return 3;
    }
  }

  LoadedProgram loaded;
  try {
    loaded = load_program(opts.files, opts.lib_dirs);
  } catch (const CapletError& e) {
    err << e.what() << "\n";
    return 3;
  }
  TypedProgram& prog = loaded.typed;

  std::vector<Violation> violations = check_program_purity(prog);
  if (!violations.empty()) {
    for (const Violation& v : violations) err << v.str() << "\n";
    return 3;
  }

  std::set<std::string> inputs(opts.files.begin(), opts.files.end());
  EncodeOptions enc_opts;
  enc_opts.disabled_frame_rules = opts.disabled_frame_rules;

  SolverConfig config;
  config.solver_path =
    opts.solver_path.empty() ? default_solver(opts.argv0) : opts.solver_path;
  config.solver_args = opts.solver_args;
  config.timeout_ms = opts.timeout_ms;
  config.jobs = opts.jobs;

  bool emit_only = !opts.emit_smt_dir.empty();
  std::vector<VerificationOutcome> all;
  try {
    for (const std::string& key : prog.verify_order) {
      const FunctionInstance* fi = prog.find_function(key);
      if (!inputs.count(fi->file)) continue;  // library helpers are not roots
      FlowResult flow = analyze_function(*fi, prog);
      if (opts.dump_roots) out << dump_roots_tsv(flow);
      EncodedFunction encoded = encode_function(*fi, flow, prog, enc_opts);
      std::string dir =
        (fs::path(emit_only ? opts.emit_smt_dir : opts.out_dir) / sanitize(key)).string();
      if (emit_only) {
        fs::create_directories(dir);
        for (size_t i = 0; i < encoded.obligations.size(); ++i) {
          std::ofstream script(fs::path(dir) / (std::to_string(i) + ".smt2"));
          script << encoded.script_for(i);
        }
        continue;
      }
      std::vector<VerificationOutcome> outcomes = verify_function(encoded, dir, config);
      all.insert(all.end(), outcomes.begin(), outcomes.end());
    }
  } catch (const CapletError& e) {
    err << e.what() << "\n";
    return 3;
  }
  if (emit_only) return 0;

  // Reporting.
  if (opts.json) {
    nlohmann::json results = nlohmann::json::array();
    for (const VerificationOutcome& oc : all) {
      nlohmann::json item;
      item["file"] = oc.file;
      item["line"] = oc.loc.line;
      item["col"] = oc.loc.col;
      item["kind"] = kind_str(oc.kind);
      item["verdict"] = oc.verdict == Verdict::Verified       ? "verified"
                        : oc.verdict == Verdict::NotVerified ? "not_verified"
                                                              : "inconclusive";
      item["millis"] = oc.solver.elapsed_ms;
      results.push_back(item);
    }
    nlohmann::json report;
    report["schema"] = 1;
    report["results"] = results;
    out << report.dump(2) << "\n";
  } else {
    for (const VerificationOutcome& oc : all) {
      out << oc.file << ":" << oc.loc.line << ":" << oc.loc.col << ": "
          << kind_str(oc.kind) << " (" << oc.description << "): " << verdict_str(oc.verdict)
          << " [" << oc.solver.elapsed_ms << " ms]";
      if (oc.verdict == Verdict::Inconclusive) {
        const char* why = oc.solver.status == SolverStatus::Timeout  ? "timeout"
                          : oc.solver.status == SolverStatus::Unknown ? "solver unknown"
                                                                       : "solver error";
        out << " (" << why << ")";
        if (!oc.solver.detail.empty()) out << ": " << oc.solver.detail;
      }
      out << "\n";
    }
  }

  if (opts.expect) {
    // Every annotation must sit on a line that produced an obligation, and
    // every obligation must match its (default VERIFY) expectation.
    int mismatches = 0;
    std::map<std::string, std::set<int>> obligation_lines;
    for (const VerificationOutcome& oc : all)
      obligation_lines[oc.file].insert(oc.loc.line);
    for (const auto& [file, lines] : loaded.expectations) {
      for (const auto& [line, what] : lines) {
        if (what != "VERIFY" && what != "FAIL" && what != "INCOMPLETE") {
          err << file << ":" << line << ":1: error: unknown expectation '" << what << "'\n";
          return 3;
        }
        if (!obligation_lines[file].count(line)) {
          err << file << ":" << line
              << ":1: error: expectation comment on a line with no obligation\n";
          return 3;
        }
      }
    }
    bool inconclusive = false;
    for (const VerificationOutcome& oc : all) {
      std::string expected = "VERIFY";
      auto fit = loaded.expectations.find(oc.file);
      if (fit != loaded.expectations.end()) {
        auto lit = fit->second.find(oc.loc.line);
        if (lit != fit->second.end()) expected = lit->second;
      }
      bool matched = false;
      if (expected == "VERIFY") matched = oc.verdict == Verdict::Verified;
      if (expected == "FAIL" || expected == "INCOMPLETE")
        matched = oc.verdict == Verdict::NotVerified;
      if (oc.verdict == Verdict::Inconclusive) inconclusive = true;
      if (!matched) {
        ++mismatches;
        out << oc.file << ":" << oc.loc.line << ":" << oc.loc.col
            << ": expectation mismatch: expected " << expected << ", got "
            << verdict_str(oc.verdict) << "\n";
      }
    }
    if (mismatches == 0) {
      out << "all expectations met (" << all.size() << " obligations)\n";
      return 0;
    }
    return inconclusive ? 2 : 1;
  }

  bool any_refuted = false;
  bool any_inconclusive = false;
  for (const VerificationOutcome& oc : all) {
    any_refuted = any_refuted || oc.verdict == Verdict::NotVerified;
    any_inconclusive = any_inconclusive || oc.verdict == Verdict::Inconclusive;
  }
  if (any_inconclusive) return 2;
  return any_refuted ? 1 : 0;
}

std::vector<ManifestEntry> load_manifest(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw CapletError(path, {}, "cannot open manifest");
  std::vector<ManifestEntry> out;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw CapletError(path, {lineno, 1}, "manifest lines are <file>\\t<exit>");
    std::string file = line.substr(0, tab);
    if (file == "file") continue;  // header
    if (!seen.insert(file).second)
      throw CapletError(path, {lineno, 1}, "duplicate manifest entry: " + file);
    ManifestEntry e;
    e.file = file;
    e.expected_exit = std::stoi(line.substr(tab + 1));
    out.push_back(std::move(e));
  }
  if (out.empty()) throw CapletError(path, {1, 1}, "the corpus manifest is empty");
  return out;
}

}  // namespace caplet

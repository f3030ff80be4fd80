#include "caplet/solver.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

extern char** environ;

namespace caplet {

namespace fs = std::filesystem;

std::string default_solver(const std::string& argv0)
{
  if (const char* env = std::getenv("CAPLET_SOLVER")) {
    if (*env) return env;
  }
  std::error_code ec;
  fs::path self(argv0);
  fs::path dir = self.has_parent_path() ? self.parent_path() : fs::path(".");
  fs::path sibling = dir / "capsmt";
  if (fs::exists(sibling, ec)) return sibling.string();
  // PATH search.
  if (const char* path = std::getenv("PATH")) {
    std::stringstream ss(path);
    std::string entry;
    for (const char* cand : {"capsmt", "z3"}) {
      std::stringstream ss2(path);
      while (std::getline(ss2, entry, ':')) {
        fs::path p = fs::path(entry) / cand;
        if (fs::exists(p, ec)) return p.string();
      }
    }
    (void)ss;
  }
  return "";
}

namespace {

// Last whitespace-delimited token of the last non-empty line.
std::string final_token(const std::string& text)
{
  std::string line;
  std::stringstream ss(text);
  std::string out;
  while (std::getline(ss, line)) {
    size_t b = line.find_first_not_of(" \t\r");
    if (b != std::string::npos) out = line;
  }
  size_t e = out.find_last_not_of(" \t\r");
  if (e == std::string::npos) return "";
  size_t b = out.find_last_of(" \t", e);
  return out.substr(b == std::string::npos ? 0 : b + 1, e - (b == std::string::npos ? 0 : b + 1) + 1);
}

}  // namespace

SolverResult run_script(const std::string& script_path, const SolverConfig& config)
{
  using clock = std::chrono::steady_clock;
  auto start = clock::now();
  auto elapsed = [&] {
    return static_cast<int>(
      std::chrono::duration_cast<std::chrono::milliseconds>(clock::now() - start).count());
  };

  SolverResult res;
  if (config.solver_path.empty()) {
    res.status = SolverStatus::ProcessError;
    res.detail = "no solver configured (set --solver or CAPLET_SOLVER)";
    return res;
  }

  int out_pipe[2];
  if (pipe(out_pipe) != 0) {
    res.detail = "pipe failed";
    return res;
  }

  std::vector<std::string> argv_store;
  argv_store.push_back(config.solver_path);
  for (const std::string& a : config.solver_args) argv_store.push_back(a);
  argv_store.push_back(script_path);
  std::vector<char*> argv;
  for (std::string& s : argv_store) argv.push_back(s.data());
  argv.push_back(nullptr);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addclose(&actions, out_pipe[0]);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDERR_FILENO);
  posix_spawn_file_actions_addclose(&actions, out_pipe[1]);

  pid_t pid = -1;
  int rc = posix_spawnp(&pid, config.solver_path.c_str(), &actions, nullptr, argv.data(),
                        environ);
  posix_spawn_file_actions_destroy(&actions);
  close(out_pipe[1]);
  if (rc != 0) {
    close(out_pipe[0]);
    res.status = SolverStatus::ProcessError;
    res.detail = std::string("cannot launch solver '") + config.solver_path
                 + "': " + std::strerror(rc);
    res.elapsed_ms = elapsed();
    return res;
  }

  std::string output;
  bool timed_out = false;
  char buf[4096];
  for (;;) {
    int remaining = config.timeout_ms - elapsed();
    if (remaining <= 0) {
      timed_out = true;
      break;
    }
    struct pollfd pfd = {out_pipe[0], POLLIN, 0};
    int pr = poll(&pfd, 1, remaining);
    if (pr <= 0) {
      timed_out = pr == 0;
      break;
    }
    ssize_t n = read(out_pipe[0], buf, sizeof buf);
    if (n <= 0) break;  // child closed stdout
    output.append(buf, static_cast<size_t>(n));
  }
  close(out_pipe[0]);

  if (timed_out) {
    kill(pid, SIGKILL);
    waitpid(pid, nullptr, 0);
    res.status = SolverStatus::Timeout;
    res.elapsed_ms = elapsed();
    return res;
  }
  int status = 0;
  waitpid(pid, &status, 0);
  res.elapsed_ms = elapsed();

  std::string tok = final_token(output);
  if (tok == "unsat") {
    res.status = SolverStatus::Unsat;
  } else if (tok == "sat") {
    res.status = SolverStatus::Sat;
    res.detail = output;  // raw model text, if the solver printed one
  } else if (tok == "unknown") {
    res.status = SolverStatus::Unknown;
  } else {
    res.status = SolverStatus::ProcessError;
    res.detail = "unrecognized solver output: " + output;
  }
  return res;
}

std::vector<VerificationOutcome> verify_function(const EncodedFunction& encoded,
                                                 const std::string& script_dir,
                                                 const SolverConfig& config)
{
  fs::path dir = fs::path(script_dir);
  fs::create_directories(dir);

  std::vector<std::string> paths;
  for (size_t i = 0; i < encoded.obligations.size(); ++i) {
    fs::path p = dir / (std::to_string(i) + ".smt2");
    std::ofstream out(p);
    out << encoded.script_for(i);
    paths.push_back(p.string());
  }

  std::vector<VerificationOutcome> outcomes(encoded.obligations.size());
  std::atomic<size_t> next{0};
  int jobs = std::max(1, config.jobs);

  auto worker = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= paths.size()) return;
      const Obligation& ob = encoded.obligations[i];
      VerificationOutcome& oc = outcomes[i];
      oc.file = ob.file;
      oc.loc = ob.loc;
      oc.kind = ob.kind;
      oc.description = ob.description;
      oc.solver = run_script(paths[i], config);
      switch (oc.solver.status) {
        case SolverStatus::Unsat: oc.verdict = Verdict::Verified; break;
        case SolverStatus::Sat: oc.verdict = Verdict::NotVerified; break;
        default: oc.verdict = Verdict::Inconclusive; break;
      }
    }
  };

  if (jobs == 1 || paths.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  // Outcomes are indexed by obligation, which the encoder already ordered by
  // source span; dispatch order cannot change it.
  return outcomes;
}

}  // namespace caplet

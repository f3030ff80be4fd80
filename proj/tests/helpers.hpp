// Shared fixtures for the test suites: corpus paths, pipeline shortcuts.
#ifndef CAPLET_TESTS_HELPERS_HPP
#define CAPLET_TESTS_HELPERS_HPP

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "caplet/driver.hpp"
#include "caplet/flow.hpp"
#include "caplet/parser.hpp"
#include "caplet/purity.hpp"

namespace test {

inline std::string source_dir() { return CAPLET_SOURCE_DIR; }
inline std::string binary_dir() { return CAPLET_BINARY_DIR; }
inline std::string corpus(const std::string& rel)
{
  return source_dir() + "/corpus/" + rel;
}
inline std::string caplet_bin() { return binary_dir() + "/tools/caplet"; }
inline std::string capsmt_bin() { return binary_dir() + "/tools/capsmt"; }

inline std::string read_file(const std::string& path)
{
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string write_temp(const std::string& name, const std::string& text)
{
  std::filesystem::path dir =
    std::filesystem::temp_directory_path() / "caplet-tests";
  std::filesystem::create_directories(dir);
  std::filesystem::path p = dir / name;
  std::ofstream out(p);
  out << text;
  return p.string();
}

// Loads one client (plus the corpus libraries) through the real pipeline.
inline caplet::LoadedProgram load_client(const std::string& client_rel)
{
  return caplet::load_program({corpus(client_rel)}, {corpus("lib")});
}

// Parses and checks a standalone snippet together with the corpus libraries.
inline caplet::LoadedProgram load_snippet(const std::string& name,
                                          const std::string& text)
{
  return caplet::load_program({write_temp(name, text)}, {corpus("lib")});
}

inline caplet::SolverConfig solver_config(int timeout_ms = 60000, int jobs = 1)
{
  caplet::SolverConfig config;
  config.solver_path = capsmt_bin();
  config.timeout_ms = timeout_ms;
  config.jobs = jobs;
  return config;
}

// Runs a shell command, returning its exit code and capturing stdout+stderr.
inline int run_command(const std::string& cmd, std::string* output = nullptr)
{
  std::string full = cmd + " 2>&1";
  FILE* pipe = popen(full.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  int status = pclose(pipe);
  if (output) *output = out;
  return WEXITSTATUS(status);
}

}  // namespace test

#endif

// capsmt entry point: reads one SMT-LIB 2 script and prints sat, unsat or
// unknown as the final line.
#include <fstream>
#include <iostream>
#include <sstream>

#include "../src/capsmt/engine.hpp"

int main(int argc, char** argv)
{
  if (argc < 2) {
    std::cerr << "usage: capsmt <script.smt2>\n";
    return 2;
  }
  std::ifstream in(argv[1]);
  if (!in) {
    std::cerr << "capsmt: cannot open " << argv[1] << "\n";
    return 2;
  }
  std::stringstream ss;
  ss << in.rdbuf();

  capsmt::Problem problem = capsmt::parse_script(ss.str());
  if (problem.unsupported && !problem.unsupported_reason.empty())
    std::cerr << "capsmt: " << problem.unsupported_reason << "\n";
  capsmt::Answer a = capsmt::solve(problem);
  switch (a) {
    case capsmt::Answer::Sat: std::cout << "sat" << std::endl; break;
    case capsmt::Answer::Unsat: std::cout << "unsat" << std::endl; break;
    case capsmt::Answer::Unknown: std::cout << "unknown" << std::endl; break;
  }
  return 0;
}

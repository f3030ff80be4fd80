// Recursive-descent parser for .cap files.
#ifndef CAPLET_PARSER_HPP
#define CAPLET_PARSER_HPP

#include <string>

#include "caplet/ast.hpp"
#include "caplet/lexer.hpp"

namespace caplet {

struct ParsedFile {
  Program program;
  std::vector<Expectation> expectations;
};

ParsedFile parse_file(const std::string& file, const std::string& source);

// Parses and resolves nothing; convenience wrapper used by tests.
Program parse_program(const std::string& file, const std::string& source);

}  // namespace caplet

#endif

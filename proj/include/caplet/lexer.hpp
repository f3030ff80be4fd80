// Hand-written lexer for .cap files. Expectation comments (//~ VERIFY etc.)
// are collected separately; ordinary comments are skipped.
#ifndef CAPLET_LEXER_HPP
#define CAPLET_LEXER_HPP

#include <string>
#include <vector>

#include "caplet/diag.hpp"

namespace caplet {

enum class Tok {
  Ident,
  Int,
  Punct,  // operators and punctuation, spelled out in `text`
  End,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  long long int_val = 0;
  Loc loc;
};

struct Expectation {
  int line = 0;
  std::string what;  // VERIFY, FAIL, INCOMPLETE
};

struct LexResult {
  std::vector<Token> tokens;   // terminated by a Tok::End token
  std::vector<Expectation> expectations;
};

LexResult lex(const std::string& file, const std::string& source);

}  // namespace caplet

#endif

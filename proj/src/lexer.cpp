#include "caplet/lexer.hpp"

#include <cctype>

namespace caplet {

namespace {

// Multi-character operators, longest first so greedy matching works.
const char* kPuncts[] = {
  "====", "==>", "==", "=>", "=", "!=", "<=", ">=", "->", "::", "&&", "||",
  "#", "[", "]", "(", ")", "{", "}", "<", ">", ",", ";", ":", ".", "*", "&",
  "+", "-", "!", "|", "_",
};

}  // namespace

LexResult lex(const std::string& file, const std::string& source)
{
  LexResult out;
  size_t i = 0;
  int line = 1, col = 1;

  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n && i < source.size(); ++k, ++i) {
      if (source[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };

  while (i < source.size()) {
    char c = source[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < source.size() && source[i + 1] == '/') {
      // `//~ WORD` records an expectation for obligations on this line.
      size_t j = i + 2;
      bool tilde = j < source.size() && source[j] == '~';
      size_t end = source.find('\n', i);
      if (end == std::string::npos) end = source.size();
      if (tilde) {
        std::string body = source.substr(j + 1, end - j - 1);
        size_t b = body.find_first_not_of(" \t");
        size_t e = body.find_last_not_of(" \t\r");
        if (b != std::string::npos)
          out.expectations.push_back({line, body.substr(b, e - b + 1)});
      }
      advance(end - i);
      continue;
    }
    if (c == '/' && i + 1 < source.size() && source[i + 1] == '*') {
      size_t end = source.find("*/", i + 2);
      if (end == std::string::npos)
        throw CapletError(file, {line, col}, "unterminated block comment");
      advance(end + 2 - i);
      continue;
    }
    Loc loc{line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < source.size()
             && (std::isalnum(static_cast<unsigned char>(source[j])) || source[j] == '_'))
        ++j;
      std::string word = source.substr(i, j - i);
      advance(j - i);
      if (word == "_") {
        out.tokens.push_back({Tok::Punct, "_", 0, loc});
      } else {
        out.tokens.push_back({Tok::Ident, word, 0, loc});
      }
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < source.size() && std::isdigit(static_cast<unsigned char>(source[j])))
        ++j;
      std::string digits = source.substr(i, j - i);
      advance(j - i);
      out.tokens.push_back({Tok::Int, digits, std::stoll(digits), loc});
      continue;
    }
    bool matched = false;
    for (const char* p : kPuncts) {
      size_t n = std::char_traits<char>::length(p);
      if (source.compare(i, n, p) == 0) {
        advance(n);
        out.tokens.push_back({Tok::Punct, p, 0, loc});
        matched = true;
        break;
      }
    }
    if (!matched)
      throw CapletError(file, loc, std::string("unexpected character '") + c + "'");
  }
  out.tokens.push_back({Tok::End, "", 0, {line, col}});
  return out;
}

}  // namespace caplet

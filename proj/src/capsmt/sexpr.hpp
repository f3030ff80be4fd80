// S-expression reader for SMT-LIB 2 scripts.
#ifndef CAPSMT_SEXPR_HPP
#define CAPSMT_SEXPR_HPP

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace capsmt {

struct SExpr {
  bool is_atom = false;
  std::string atom;             // symbol, |quoted symbol| (unquoted here), or numeral
  std::vector<SExpr> items;

  const SExpr& operator[](size_t i) const { return items[i]; }
  size_t size() const { return items.size(); }
  bool is(const char* sym) const { return is_atom && atom == sym; }
  std::string str() const;
};

class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Parses a whole script into a list of top-level forms.
std::vector<SExpr> read_script(const std::string& text);

}  // namespace capsmt

#endif

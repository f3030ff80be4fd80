// Canonical source printer. parse(print(parse(s))) is the identity on the
// AST, which the round-trip tests check via printed-form equality.
#ifndef CAPLET_PRINTER_HPP
#define CAPLET_PRINTER_HPP

#include <string>

#include "caplet/ast.hpp"

namespace caplet {

std::string print_program(const Program& prog);
std::string print_expr(const Expr& e);
std::string print_type(const TypeExpr& t);

}  // namespace caplet

#endif

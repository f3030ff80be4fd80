// Minimal s-expression builders for SMT-LIB 2 output. Symbols derived from
// type keys are emitted as |quoted symbols| so the readable key is the name.
#ifndef CAPLET_SMT_HPP
#define CAPLET_SMT_HPP

#include <initializer_list>
#include <string>
#include <vector>

namespace caplet::smt {

inline std::string quote(const std::string& name)
{
  return "|" + name + "|";
}

inline std::string app(const std::string& fn, const std::vector<std::string>& args)
{
  if (args.empty()) return fn;
  std::string out = "(" + fn;
  for (const std::string& a : args) out += " " + a;
  return out + ")";
}

inline std::string num(long long v)
{
  if (v < 0) return "(- " + std::to_string(-v) + ")";
  return std::to_string(v);
}

inline std::string eq(const std::string& a, const std::string& b)
{
  return "(= " + a + " " + b + ")";
}

inline std::string not_(const std::string& a) { return "(not " + a + ")"; }

inline std::string and_(const std::vector<std::string>& xs)
{
  if (xs.empty()) return "true";
  if (xs.size() == 1) return xs[0];
  return app("and", xs);
}

inline std::string or_(const std::vector<std::string>& xs)
{
  if (xs.empty()) return "false";
  if (xs.size() == 1) return xs[0];
  return app("or", xs);
}

inline std::string implies(const std::string& a, const std::string& b)
{
  return "(=> " + a + " " + b + ")";
}

// (forall ((x S) (y T)) body)
inline std::string forall(const std::vector<std::pair<std::string, std::string>>& vars,
                          const std::string& body)
{
  std::string out = "(forall (";
  for (size_t i = 0; i < vars.size(); ++i) {
    if (i) out += " ";
    out += "(" + vars[i].first + " " + vars[i].second + ")";
  }
  return out + ") " + body + ")";
}

inline std::string is_ctor(const std::string& ctor, const std::string& term)
{
  return "((_ is " + ctor + ") " + term + ")";
}

}  // namespace caplet::smt

#endif

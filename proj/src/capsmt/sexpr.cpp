#include "sexpr.hpp"

namespace capsmt {

std::string SExpr::str() const
{
  if (is_atom) return atom;
  std::string out = "(";
  for (size_t i = 0; i < items.size(); ++i) {
    if (i) out += " ";
    out += items[i].str();
  }
  return out + ")";
}

namespace {

class Reader {
public:
  explicit Reader(const std::string& text) : text_(text) {}

  std::vector<SExpr> read_all()
  {
    std::vector<SExpr> out;
    skip_ws();
    while (pos_ < text_.size()) {
      out.push_back(read());
      skip_ws();
    }
    return out;
  }

private:
  const std::string& text_;
  size_t pos_ = 0;

  void skip_ws()
  {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos_;
      } else {
        break;
      }
    }
  }

  SExpr read()
  {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      SExpr list;
      skip_ws();
      while (pos_ < text_.size() && text_[pos_] != ')') {
        list.items.push_back(read());
        skip_ws();
      }
      if (pos_ >= text_.size()) throw ParseError("missing ')'");
      ++pos_;
      return list;
    }
    if (c == ')') throw ParseError("unexpected ')'");
    if (c == '|') {
      size_t end = text_.find('|', pos_ + 1);
      if (end == std::string::npos) throw ParseError("unterminated |symbol|");
      SExpr atom;
      atom.is_atom = true;
      atom.atom = text_.substr(pos_ + 1, end - pos_ - 1);
      pos_ = end + 1;
      return atom;
    }
    if (c == '"') {
      size_t end = pos_ + 1;
      while (end < text_.size() && text_[end] != '"') ++end;
      if (end >= text_.size()) throw ParseError("unterminated string");
      SExpr atom;
      atom.is_atom = true;
      atom.atom = text_.substr(pos_, end - pos_ + 1);
      pos_ = end + 1;
      return atom;
    }
    size_t end = pos_;
    while (end < text_.size()) {
      char d = text_[end];
      if (d == '(' || d == ')' || d == ' ' || d == '\t' || d == '\r' || d == '\n'
          || d == ';')
        break;
      ++end;
    }
    SExpr atom;
    atom.is_atom = true;
    atom.atom = text_.substr(pos_, end - pos_);
    pos_ = end;
    return atom;
  }
};

}  // namespace

std::vector<SExpr> read_script(const std::string& text)
{
  Reader r(text);
  return r.read_all();
}

}  // namespace capsmt

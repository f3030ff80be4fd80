// Source locations, diagnostics and the fatal-error exception used by the
// frontend. Diagnostics print as "file:line:col: error: message".
#ifndef CAPLET_DIAG_HPP
#define CAPLET_DIAG_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace caplet {

struct Loc {
  int line = 0;  // 1-based; 0 means "no location"
  int col = 0;

  bool operator==(const Loc&) const = default;
  auto operator<=>(const Loc&) const = default;
};

struct Diag {
  std::string file;
  Loc loc;
  std::string message;

  std::string str() const
  {
    return file + ":" + std::to_string(loc.line) + ":" + std::to_string(loc.col)
           + ": error: " + message;
  }
};

// Thrown for unrecoverable frontend errors (lexing, parsing, resolution).
class CapletError : public std::runtime_error {
public:
  CapletError(std::string file, Loc loc, const std::string& message)
    : std::runtime_error(Diag{file, loc, message}.str())
    , diag{std::move(file), loc, message}
  {}

  Diag diag;
};

}  // namespace caplet

#endif

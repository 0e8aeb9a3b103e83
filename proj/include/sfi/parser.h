#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sfi/program.h"

namespace sfi {

struct Diagnostic {
  enum class Kind { SyntaxError, UseBeforeDef, DuplicateName, MissingOutcome };

  Kind kind = Kind::SyntaxError;
  std::string file;
  int line = 0;
  int column = 0;
  std::string message;

  /// `file:line:col: error: message`
  std::string str() const;
};

/// Thrown by parse(); carries every diagnostic found.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

/// Parses SimplePPL source text into a Program. Syntax errors stop at the
/// first offending token; semantic errors are collected.
Program parse(std::string_view text, std::string_view file = "<input>");

/// Reads and parses a `.sppl` file.
Program parse_file(const std::string& path);

/// Canonical text: two-space indentation, one definition per line, branches
/// in parent-value order. parse(print(p)) == p.
std::string print(const Program& program);

}  // namespace sfi

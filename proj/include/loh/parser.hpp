#pragma once

#include <string>

#include "loh/formula.hpp"

namespace loh {

struct ParseError : Error {
  ParseError(std::string message, int line, int column);
  int line;
  int column;
};

/// Parses a full program: `let name = formula;` and `out label = formula;`
/// items, `#` line comments. Identifiers act as placeholders when a prior
/// `let` declared them, as plain variables otherwise; forward references to
/// later declarations are rejected. Choice ids are assigned in source order
/// starting at 0.
Program parse_program(const std::string& source);

/// Parses a single formula expression (no let/out items, no placeholders).
/// Choice ids start at `first_choice_id`.
FormulaPtr parse_formula(const std::string& source, int first_choice_id = 0);

}  // namespace loh

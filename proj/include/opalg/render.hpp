#pragma once

#include <string>

#include "opalg/expr.hpp"

namespace opalg {

enum class Format { Plain, Latex };

// Plain output round-trips through parse(); LaTeX matches the bracketed
// commutator notation [A, B]_- used in the derivation reports.
std::string render(const Expr& e, Format fmt = Format::Plain);
std::string render(const Equation& eq, Format fmt = Format::Plain);

}  // namespace opalg

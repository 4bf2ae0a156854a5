#pragma once

#include "opalg/context.hpp"
#include "opalg/expr.hpp"

namespace opalg {

// Gradient of a scalar field with respect to the indexed coordinate. Knows
// the power rule for squared-coordinate fields, resolves powers of a defined
// potential through its definition, and leaves other position-dependent
// functions as symbolic derivatives. Throws Error::Domain when f contains
// anything that is not a function of position.
Expr grad(const Index& n, const Expr& f, const AlgebraContext& ctx);

// Applies every registered differential-operator factor to the product of
// everything standing to its right, rightmost factor first. Commutators whose
// body mentions a registered operator are expanded beforehand. When the
// explicit momentum representation is enabled, each application evaluates to
// -i*hbar times the derivative of its operand; otherwise the application is
// kept as an inert p[n](...) node. A registered operator with nothing to its
// right stays an ordinary multiplication operator.
Expr apply_diffops(const Expr& e, const AlgebraContext& ctx);
Equation apply_diffops(const Equation& eq, const AlgebraContext& ctx);

// Returns a context with the explicit representation switched on or off.
AlgebraContext enable_explicit_momentum(const AlgebraContext& ctx, bool on);

// Cancels the trailing test function from every term of both sides: every
// nonzero term must end in a first power of one and the same invertible
// field, which is then dropped. Throws Error::Domain otherwise.
Equation test_function_eliminate(const Equation& eq, const AlgebraContext& ctx);
Expr test_function_eliminate(const Expr& e, const AlgebraContext& ctx);

}  // namespace opalg

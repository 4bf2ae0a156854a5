#pragma once

#include "opalg/context.hpp"
#include "opalg/expr.hpp"
#include "opalg/monomial.hpp"

namespace opalg {

// Full normal former: expands active commutators and products, contracts
// metric factors, reduces epsilon pairs, normal-orders operator words with
// the context's commutator rules, canonicalizes dummy indices and combines
// like terms. Idempotent; throws Error::Budget when the per-term rewrite
// allowance is exhausted.
Expr simplify(const Expr& e, const AlgebraContext& ctx);
Equation simplify(const Equation& eq, const AlgebraContext& ctx);

// Single-threaded reference path; bit-identical output to simplify().
Expr simplify_serial(const Expr& e, const AlgebraContext& ctx);

// Renames dummy indices canonically per term and combines terms that agree
// up to dummy naming; no commutator rules are applied.
Expr equalize_repeated_indices(const Expr& e, const AlgebraContext& ctx);
Equation equalize_repeated_indices(const Equation& eq, const AlgebraContext& ctx);

// Replaces every epsilon pair sharing at least one index via the metric
// determinant identity and contracts the result; no operator reordering.
Expr epsilon_reduce(const Monomial& m, const AlgebraContext& ctx);

// Normal-orders a single monomial against the rule store (with correction
// terms), returning the fully simplified sum.
Expr normal_order(const Monomial& m, const AlgebraContext& ctx);

// Rewrites every active commutator node as ab - ba (dummy-safe products).
// Inert commutators keep the bracket, but commuting prefactors move out
// bilinearly and a fully commuting argument annihilates the bracket.
Expr expand_active_commutators(const Expr& e);

}  // namespace opalg

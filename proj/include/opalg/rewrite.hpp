#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "opalg/context.hpp"
#include "opalg/expr.hpp"

namespace opalg {

// One entry of a product-ordering specification: factors are matched by
// symbol, exact power and (when given) index name.
struct FactorPattern {
  std::string name;
  std::optional<Index> index;
  Rational power{1};
};
using ProductOrderSpec = std::vector<FactorPattern>;

// Builds a pattern from an expression like X[a]^2, V^3 or p[k].
FactorPattern pattern_from_expr(const Expr& e);

// lhs: the inert commutator of the inputs; rhs: ab - ba expanded by
// bilinearity down to factor pairs, resolved through the rule store and
// simplified. Pairs without a rule stay as inert commutator factors.
// Equation inputs commute side-wise.
Equation commutator(const Expr& a, const Expr& b, const AlgebraContext& ctx);
Equation commutator(const Equation& a, const Equation& b, const AlgebraContext& ctx);
Equation commutator(const Equation& a, const Expr& b, const AlgebraContext& ctx);
Equation commutator(const Expr& a, const Equation& b, const AlgebraContext& ctx);

// Moves matched factors of every product term into the spec order using
// commutator-rule corrections; unmatched factors keep their relative order.
// Throws Error::NoRule when a required swap has no rule and the pair is not
// provably commuting.
Expr sort_products(const Expr& e, const ProductOrderSpec& spec, const AlgebraContext& ctx);
Equation sort_products(const Equation& eq, const ProductOrderSpec& spec,
                       const AlgebraContext& ctx);

// Replaces every occurrence of each identity's lhs (a monomial pattern, or a
// sum of monomial patterns sharing one index binding) as a contiguous factor
// run; dummy indices of the pattern are variables, free indices bind
// consistently and rename the rhs. Applied repeatedly to fixed point.
Expr substitute_tensor(const std::vector<Equation>& identities, const Expr& target,
                       const AlgebraContext& ctx);
Equation substitute_tensor(const std::vector<Equation>& identities, const Equation& target,
                           const AlgebraContext& ctx);

// Renames free indices (dummies are refreshed on collision); renaming an
// absent index is a no-op, renaming onto an existing free index throws.
Expr substitute_tensor_indices(const std::vector<std::pair<Index, Index>>& renaming,
                               const Expr& target);
Equation substitute_tensor_indices(const std::vector<std::pair<Index, Index>>& renaming,
                                   const Equation& target);

// Plain structural subtree replacement (no index-variable matching).
Expr subs_syntactic(const std::vector<Equation>& identities, const Expr& target);
Equation subs_syntactic(const std::vector<Equation>& identities, const Equation& target);

// Solves eq for target: target must occur as a summand with a commuting
// scalar cofactor (in one or more terms); everything else moves across.
Equation isolate(const Equation& eq, const Expr& target, const AlgebraContext& ctx);

// Distributes products over sums and integer powers of sums; factor order
// untouched.
Expr expand(const Expr& e);
Equation expand(const Equation& eq);

// Combines terms with identical operator content over exact scalar
// arithmetic; no operator reordering.
Expr normal(const Expr& e, const AlgebraContext& ctx);
Equation normal(const Equation& eq, const AlgebraContext& ctx);

// Best-effort factorization: common scalar multiplier, then common left and
// right operator monomials, then a rank-1 bilinear split. Returns the input
// when nothing factors.
Expr factor(const Expr& e, const AlgebraContext& ctx);
Equation factor(const Equation& eq, const AlgebraContext& ctx);

// Hermitian conjugation: reverses products, conjugates i, resolves declared
// hermitian operators, wraps unknown ones in Dagger.
Expr dagger(const Expr& e, const AlgebraContext& ctx);
Equation dagger(const Equation& eq, const AlgebraContext& ctx);

}  // namespace opalg

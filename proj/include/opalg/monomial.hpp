#pragma once

#include <array>
#include <string>
#include <vector>

#include "opalg/context.hpp"
#include "opalg/expr.hpp"

namespace opalg {

// One noncommutative operator factor of a monomial, in word order.
struct OpFactor {
  enum class Kind {
    TensorF,    // indexed operator, integer power (X[a], p[a]^2, L[b], ...)
    FuncF,      // unindexed operator function power (V^3, G^-1, H)
    FieldPowF,  // (X_l^2)^q with rational q; the scoped index is anonymous
    DerivF,     // derivative factor d_[sorted indices](slot)
    ApplyF,     // inert differential application  p[n](slot)
    CommutF,    // inert commutator kept as an opaque factor
    DaggerF,    // adjoint-wrapped atom
  };
  Kind kind;
  std::string name;            // TensorF/FuncF/ApplyF symbol
  std::vector<Index> indices;  // TensorF (single), DerivF, ApplyF
  Rational power{1};           // TensorF/FuncF integer, FieldPowF rational
  Expr slot;                   // DerivF target, ApplyF/DaggerF operand, CommutF node

  bool operator==(const OpFactor& o) const;
};

// Flattened multiplicative term: rational coefficient, power of i, sorted
// commuting-scalar atoms, structural eps/g factors, ordered operator word.
struct Monomial {
  Rational coeff{1};
  int ipow = 0;
  std::vector<std::pair<Expr, Rational>> scalars;  // base -> exponent
  std::vector<std::array<Index, 3>> eps;
  std::vector<std::array<Index, 2>> gs;
  std::vector<OpFactor> ops;

  bool is_zero() const { return coeff.is_zero(); }
};

// Decomposes one distributed term (no Add factors, no active commutators).
Monomial monomial_from_term(const Expr& term);
Expr monomial_to_expr(const Monomial& m);
Expr op_factor_to_expr(const OpFactor& f);

// All index names appearing in the monomial with their multiplicities
// (FieldPowF scoped indices excluded).
std::map<Index, int> monomial_index_counts(const Monomial& m);
void rename_monomial_indices(Monomial& m, const std::map<Index, Index>& sub);

// Multiplies the scalar atom base^exp into m (merging exponents).
void push_scalar(Monomial& m, const Expr& base, const Rational& exp);

// Merges adjacent equal-base operator factors (V^3 V^-1 -> V^2); drops
// zero powers.
void merge_adjacent_ops(Monomial& m);

// True when the two factors provably commute: both are members of the
// position family, or the context stores a zero commutator rule for them.
bool factors_commute(const OpFactor& a, const OpFactor& b, const AlgebraContext& ctx);

// Normal-ordering sort key of a factor (class rank first).
std::string factor_sort_key(const OpFactor& f, const AlgebraContext& ctx);
int factor_class_rank(const OpFactor& f, const AlgebraContext& ctx);

// Number of non-position operator factors, counting integer powers; the
// measure that strictly decreases across rule corrections.
long operator_degree(const Monomial& m, const AlgebraContext& ctx);

// Eps/g housekeeping: sorts eps triples (sign into coeff), kills repeated-
// index eps, sorts g pairs, orders both lists.
void normalize_structural(Monomial& m);

// Metric contraction to fixed point: g_aa -> 3, g with a substitutable
// dummy renames the partner occurrence.
void contract_metric(Monomial& m, int dimension);

// Assumption-aware scalar normalization: folds numeric powers, splits
// radicals of signed products, merges s and -s powered atoms.
void normalize_scalars(Monomial& m, const AlgebraContext& ctx);

// Canonical dummy naming: tries every assignment of canonical letters to
// the term dummies (up to a bound), normalizes the word by provably-
// commuting moves only, and keeps the lexicographically least key. If the
// same key is reachable with both signs the monomial is zero.
// Returns the canonical key (empty when the monomial vanished).
std::string canonicalize_dummies(Monomial& m, const AlgebraContext& ctx);

// Key of the monomial as it stands (no dummy-orbit search); coefficient
// excluded, i-power included.
std::string monomial_key(const Monomial& m, const AlgebraContext& ctx);

// Commuting part of the monomial (coefficient, i, scalars, eps, g) as one
// expression, and the operator word slice ops[lo..hi) as a product.
Expr monomial_scalar_expr(const Monomial& m);
Expr monomial_word_expr(const Monomial& m, size_t lo, size_t hi);

// The factor raised to an explicit power (p = 0 gives 1).
Expr op_power_expr(const OpFactor& f, long p);

// Swaps ops[i] and ops[i+1] in place when the pair provably commutes or a
// commutator rule supplies the correction terms (pushed onto extra as full
// expressions, including the monomial's scalar part and the untouched
// factors). Returns false when no rule decides the pair.
bool swap_with_rules(Monomial& m, size_t i, const AlgebraContext& ctx, long& budget,
                     ExprVec& extra);

// Instantiates a matched rule template: formal indices bind to the actual
// ones of the two factors, fresh template indices get names unused in host.
// A reversed match negates the template.
Expr rule_instance(const RuleMatch& rm, const std::vector<Index>& ai,
                   const std::vector<Index>& bi, const std::set<Index>& host);

}  // namespace opalg

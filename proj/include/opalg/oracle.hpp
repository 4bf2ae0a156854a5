#pragma once

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "opalg/context.hpp"
#include "opalg/expr.hpp"

namespace opalg {

// Brute-force equality certification, independent of the symbolic pipeline:
// expressions are expanded into explicit components over {1,2,3} (epsilon and
// the metric evaluate to numbers, dummies are summed out) and normal-ordered
// at component level with commutator corrections instantiated from the
// context rules. A second, functional checker applies both sides of an
// identity to a closed family of explicit functions with exact arithmetic.

// commuting prefactor: rational * i^ipow * product of symbol powers
struct ScalarPart {
  Rational coeff{1};
  int ipow = 0;  // 0..3
  std::map<std::string, Rational> scalars;

  bool is_zero() const { return coeff.is_zero(); }
  bool same_symbols(const ScalarPart& o) const {
    return ipow == o.ipow && scalars == o.scalars;
  }
};
ScalarPart scalar_mul(const ScalarPart& x, const ScalarPart& y);

// one atom of a component word, e.g. X(2), p(1), V^-3, L(3)^2
struct CompFactor {
  std::string name;
  std::vector<int> comps;  // one entry per index, each 1..3
  long power = 1;

  bool operator==(const CompFactor& o) const {
    return name == o.name && comps == o.comps && power == o.power;
  }
  bool operator<(const CompFactor& o) const {
    return std::tie(name, comps, power) < std::tie(o.name, o.comps, o.power);
  }
};

struct CompTerm {
  ScalarPart s;
  std::vector<CompFactor> word;
};
using CompSum = std::vector<CompTerm>;

// Instantiates e at the given assignment of its free indices and sums every
// dummy over {1,2,3}. Throws Error::Index for an unassigned free index,
// Error::Budget for more than four dummies in one term, Error::Domain for
// content outside the component algebra.
CompSum expand_components(const Expr& e, const AlgebraContext& ctx,
                          const std::map<Index, int>& assignment);

// Sorts every term's atoms by the fixed component total order, inserting
// commutator corrections instantiated from the context rules; like terms
// merge. The result is canonical for the rule set. Throws Error::NoRule when
// an adjacent pair is neither known to commute nor covered by a rule, and
// Error::Budget when the correction cascade exceeds the context budget.
CompSum component_normal_order(CompSum ce, const AlgebraContext& ctx);

std::string render_components(const CompSum& ce);

// ---------------------------------------------------------------------------

enum class VerdictKind { Equal, Unequal, Inconclusive };

struct Verdict {
  VerdictKind kind = VerdictKind::Inconclusive;
  std::string detail;  // witness assignment and residual, or the reason

  bool ok() const { return kind == VerdictKind::Equal; }
};

// Certifies a = b by sweeping every assignment of the free indices,
// expanding to components and comparing normal forms. Assignments run in
// parallel; the serial variant is the reference implementation.
Verdict equivalence_check(const Expr& a, const Expr& b, const AlgebraContext& ctx);
Verdict equivalence_check(const Equation& eq, const AlgebraContext& ctx);
Verdict equivalence_check_serial(const Expr& a, const Expr& b, const AlgebraContext& ctx);

// ---------------------------------------------------------------------------
// Functional representation: the span of x^a y^b z^c r^m is exactly closed
// under multiplication by coordinates and powers of r and under -i*hbar*d.
// Applying both sides of an operator identity to a fixed sample of such
// elements gives an exact, numerics-free check.

struct BasisElement {
  long a = 0, b = 0, c = 0;  // exponents of x, y, z
  long m = 0;                // exponent of r
};

// deterministic sample: 12 elements up to total degree 3, r-power >= -3
std::vector<BasisElement> default_basis_sample();

Verdict functional_check(const Equation& identity, const AlgebraContext& ctx);
Verdict functional_check(const Equation& identity, const AlgebraContext& ctx,
                         const std::vector<BasisElement>& sample);

}  // namespace opalg

#pragma once

#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "opalg/rational.hpp"

namespace opalg {

class Error : public std::runtime_error {
 public:
  enum class Kind {
    Parse,
    Index,
    Arity,
    UnknownSymbol,
    Domain,       // invalid operation for the expression shape
    NoRule,       // sort/rewrite needed a commutator rule that is absent
    Budget,       // rewrite budget exhausted
    Label,        // derivation label errors
    Io,
  };
  Error(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
  Kind kind;
};

using Index = std::string;

enum class NodeKind {
  Number,      // exact rational literal
  Scalar,      // named commuting scalar symbol (hbar, kappa, m_e, E, j, n)
  ScalarFunc,  // scalar function atom, e.g. E(n)
  Imaginary,   // the imaginary unit
  Add,
  Mul,
  Pow,         // rational exponent; operator bases only with integer exponents
  Tensor,      // indexed symbol: X[a], p[a], L[a], Z[a], M[a], J[a], K[a], eps[a,b,c], g[a,b]
  OpFunc,      // operator-valued function with suppressed argument: V, G, H
  Commut,      // commutator bracket, inert or active
  Dagger,      // adjoint wrapper for atoms of unknown hermiticity
  Deriv,       // partial derivative(s) applied to a target: d_[n](V)
  Apply,       // inert application of a differential operator factor: p[n](f)
};

struct Node;

class Expr {
 public:
  Expr();  // the number 0
  explicit Expr(std::shared_ptr<const Node> p) : p_(std::move(p)) {}
  const Node& node() const { return *p_; }
  const std::shared_ptr<const Node>& ptr() const { return p_; }
  NodeKind kind() const;
  bool is(NodeKind k) const { return kind() == k; }

  bool is_number() const { return is(NodeKind::Number); }
  bool is_zero() const;
  bool is_one() const;

 private:
  std::shared_ptr<const Node> p_;
};

using ExprVec = std::vector<Expr>;

struct Node {
  NodeKind kind;
  Rational value;              // Number value; Pow exponent
  std::string name;            // Scalar/ScalarFunc/Tensor/OpFunc/Apply symbol name
  std::string farg;            // ScalarFunc argument name
  std::vector<Index> indices;  // Tensor/Deriv/Apply indices
  ExprVec kids;                // Add/Mul terms; Pow base; Commut {a,b}; Dagger/Deriv/Apply operand
  bool inert = false;          // Commut only
};

// Factories. All canonical flattening lives here: nested sums/products are
// flattened, numeric factors folded, powers of the imaginary unit reduced,
// commuting scalar factors hoisted left, adjacent equal-base operator powers
// merged, and structurally identical summands collected. Operator factor
// order is otherwise preserved verbatim.
Expr number(const Rational& r);
Expr integer(std::int64_t n);
Expr scalar(const std::string& name);
Expr scalar_func(const std::string& name, const std::string& arg);
Expr imaginary();
Expr add(ExprVec terms);
Expr mul(ExprVec factors);
Expr pow(const Expr& base, const Rational& exponent);
Expr tensor(const std::string& name, std::vector<Index> indices);
Expr opfunc(const std::string& name);
Expr commut(const Expr& a, const Expr& b, bool inert);
Expr dagger_node(const Expr& e);
Expr deriv(std::vector<Index> indices, const Expr& target);
Expr apply_node(const std::string& op, std::vector<Index> indices, const Expr& arg);

inline Expr operator+(const Expr& a, const Expr& b) { return add({a, b}); }
inline Expr operator-(const Expr& a, const Expr& b) { return add({a, mul({integer(-1), b})}); }
inline Expr operator*(const Expr& a, const Expr& b) { return mul({a, b}); }
inline Expr operator-(const Expr& a) { return mul({integer(-1), a}); }

bool structural_equal(const Expr& a, const Expr& b);
// Deterministic total order on expressions (used for canonical sorts).
int compare(const Expr& a, const Expr& b);

// True for expressions built purely from numbers, scalars, scalar functions
// and the imaginary unit; such factors commute with everything.
bool is_commuting_scalar(const Expr& e);

// Splits a term into (rational coefficient, remainder).
std::pair<Rational, Expr> split_coefficient(const Expr& term);
// The summands of e (a single non-Add expression yields itself).
ExprVec terms_of(const Expr& e);
// The factors of e (a single non-Mul expression yields itself).
ExprVec factors_of(const Expr& e);

// Index bookkeeping. Counts are per term; a Pow base is an index scope: its
// internally paired indices do not leak, its free indices count once per
// integer power. An index occurring more than twice is a hard error where
// stated by callers.
std::map<Index, int> index_counts(const Expr& term);
std::set<Index> term_dummies(const Expr& term);
std::set<Index> term_frees(const Expr& term);
// Free indices that every summand shares (error if summands disagree).
std::set<Index> free_indices_checked(const Expr& e);
// Every index name mentioned anywhere (including scopes), for fresh-name picks.
std::set<Index> all_index_names(const Expr& e);
void collect_index_names(const Expr& e, std::set<Index>& out);

// Renames indices per map. Scoped Pow-base internals are not touched unless
// they are free within the base.
Expr rename_indices(const Expr& e, const std::map<Index, Index>& m);
// Renames the term-level dummy indices of every term of e to names outside
// `avoid` (and outside e's own names).
Expr refresh_dummies(const Expr& e, const std::set<Index>& avoid);

// Fresh index names: first unused of a, b, ..., z, a1, b1, ...
Index fresh_index(const std::set<Index>& used);

struct Equation {
  Expr lhs, rhs;
  Equation() = default;
  Equation(Expr l, Expr r) : lhs(std::move(l)), rhs(std::move(r)) {}
};

// Side-wise equation arithmetic. Multiplication refreshes colliding dummy
// names on the right operand; pow expands into an explicit product with
// per-copy dummy refresh so Einstein counting stays valid.
Equation eq_add(const Equation& a, const Equation& b);
Equation eq_sub(const Equation& a, const Equation& b);
Equation eq_add_expr(const Equation& a, const Expr& b);
Equation eq_sub_expr(const Equation& a, const Expr& b);
Equation eq_mul_right(const Equation& a, const Expr& b);
Equation eq_mul_left(const Expr& b, const Equation& a);
Equation eq_div(const Equation& a, const Equation& b);
Equation eq_div_expr(const Equation& a, const Expr& b);
Equation eq_pow(const Equation& a, long n);
Equation eq_rev(const Equation& a);

// Multiplies two expressions, refreshing the right operand's dummies that
// collide with names in the left.
Expr mul_refresh(const Expr& a, const Expr& b);

// e with every integer power of a sum or of a dummy-carrying product expanded
// and all products distributed over sums. Dummies are refreshed per copy.
Expr distribute(const Expr& e);

Expr zero();
Expr one();

}  // namespace opalg
